/* C interface to the driftlimit solver library.
 *
 * Every function returning dl_status leaves a thread-local message readable
 * with dl_last_error() when it fails.  Handles are opaque and owned by the
 * caller; release them with the matching *_free function.  Strings returned
 * through char** are released with dl_string_free. */
#ifndef DRIFTLIMIT_H
#define DRIFTLIMIT_H

#include <stddef.h>

#if defined(_WIN32)
#define DL_API __declspec(dllexport)
#else
#define DL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dl_status {
  DL_OK = 0,
  DL_ERR_ARGUMENT = 1, /* null handle, bad size or invalid parameter */
  DL_ERR_CONFIG = 2,   /* configuration parse or validation failure */
  DL_ERR_SOLVER = 3,   /* linear solve did not converge */
  DL_ERR_IO = 4,       /* a file could not be read or written */
  DL_ERR_INTERNAL = 5
} dl_status;

typedef enum dl_experiment {
  DL_DIFFUSION_VALIDATE = 0,
  DL_SIMULATE = 1,
  DL_C_STUDY = 2
} dl_experiment;

typedef enum dl_scheme { DL_SCHEME_AP = 0, DL_SCHEME_CLASSICAL = 1 } dl_scheme;

/* Cell fields of a two-fluid state. */
typedef enum dl_quantity {
  DL_N = 0,
  DL_PHI = 1,
  DL_QI_X = 2,
  DL_QI_Y = 3,
  DL_QI_Z = 4,
  DL_QE_X = 5,
  DL_QE_Y = 6,
  DL_QE_Z = 7
} dl_quantity;

typedef struct dl_config dl_config;
typedef struct dl_report dl_report;
typedef struct dl_sim dl_sim;

DL_API const char* dl_version(void);
DL_API const char* dl_last_error(void);
DL_API const char* dl_status_string(dl_status s);
DL_API void dl_string_free(char* s);

/* Defaults of every configuration key for an experiment, as JSON. */
DL_API dl_status dl_default_config_json(dl_experiment kind, char** out);

/* path may be NULL for the preset; overrides are "key.path=value". */
DL_API dl_status dl_config_load(dl_experiment kind, const char* path,
                                const char* const* overrides, size_t n_overrides,
                                dl_config** out);
DL_API dl_status dl_config_parse(dl_experiment kind, const char* json_text,
                                 const char* const* overrides, size_t n_overrides,
                                 dl_config** out);
DL_API dl_status dl_config_resolved_json(const dl_config* cfg, char** out);
DL_API void dl_config_free(dl_config* cfg);

/* Runs the configured experiment, writes its outputs and meta.json when an
 * output directory is set, and returns a JSON summary.  Divergence of a
 * scheme is data in the summary, not an error. */
DL_API dl_status dl_run(const dl_config* cfg, dl_report** out);
DL_API const char* dl_report_json(const dl_report* rep);
DL_API void dl_report_free(dl_report* rep);

/* Step-by-step access to one scheme on the configured two-fluid setup. */
DL_API dl_status dl_sim_create(const dl_config* cfg, dl_scheme scheme, dl_sim** out);
/* Advances up to nsteps; *diverged is set to 1 and stepping stops on failure. */
DL_API dl_status dl_sim_step(dl_sim* sim, int nsteps, int* diverged);
DL_API double dl_sim_time(const dl_sim* sim);
DL_API size_t dl_sim_num_cells(const dl_sim* sim);
DL_API dl_status dl_sim_get(const dl_sim* sim, dl_quantity q, double* buf, size_t len);
/* Last step: continuity_rel[2], momentum_rel[2], ap_node[2]. */
DL_API dl_status dl_sim_residuals(const dl_sim* sim, double out[6]);
DL_API void dl_sim_free(dl_sim* sim);

#ifdef __cplusplus
}
#endif

#endif /* DRIFTLIMIT_H */
