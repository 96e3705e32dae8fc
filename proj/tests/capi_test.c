/* Exercises the public header from plain C: handles, status codes, ownership. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "driftlimit/driftlimit.h"

static int failures = 0;

#define EXPECT(cond)                                               \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: EXPECT(%s)\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

int main(void) {
  char* text = NULL;
  dl_config* cfg = NULL;
  dl_sim* sim = NULL;
  const char* ov[2] = {"grid.n=8", "t_end=1e-8"};
  const char* bad[1] = {"physics.tau=-1"};
  double buf[64];
  double res[6];
  int diverged = -1;

  EXPECT(strlen(dl_version()) > 0);
  EXPECT(strcmp(dl_status_string(DL_OK), "ok") == 0);

  EXPECT(dl_default_config_json(DL_C_STUDY, &text) == DL_OK);
  EXPECT(text != NULL && strstr(text, "\"c_study\"") != NULL);
  dl_string_free(text);

  EXPECT(dl_config_parse(DL_SIMULATE, NULL, bad, 1, &cfg) == DL_ERR_CONFIG);
  EXPECT(cfg == NULL);
  EXPECT(strlen(dl_last_error()) > 0);
  EXPECT(dl_config_parse(DL_SIMULATE, NULL, NULL, 1, &cfg) == DL_ERR_ARGUMENT);

  EXPECT(dl_config_parse(DL_SIMULATE, NULL, ov, 2, &cfg) == DL_OK);
  EXPECT(dl_config_resolved_json(cfg, &text) == DL_OK);
  EXPECT(strstr(text, "\"n\": 8") != NULL);
  dl_string_free(text);

  EXPECT(dl_sim_create(cfg, DL_SCHEME_CLASSICAL, &sim) == DL_OK);
  EXPECT(dl_sim_num_cells(sim) == 64);
  EXPECT(dl_sim_step(sim, 2, &diverged) == DL_OK);
  EXPECT(diverged == 0);
  EXPECT(dl_sim_get(sim, DL_QI_X, buf, 64) == DL_OK);
  EXPECT(buf[0] > 0.8 && buf[0] < 0.9);
  EXPECT(dl_sim_get(sim, (dl_quantity)42, buf, 64) == DL_ERR_ARGUMENT);
  EXPECT(dl_sim_residuals(sim, res) == DL_OK);
  dl_sim_free(sim);
  dl_config_free(cfg);

  dl_sim_free(NULL);
  dl_config_free(NULL);
  dl_report_free(NULL);
  EXPECT(dl_run(NULL, NULL) == DL_ERR_ARGUMENT);

  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("capi: all checks passed\n");
  return failures ? EXIT_FAILURE : EXIT_SUCCESS;
}
