// driftlimit <subcommand> [--config FILE] [--override K=V]... [--out DIR] [--scale S]
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "driftlimit/driftlimit.h"

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  double scale = 0.0;
  bool print_defaults = false;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option("--override", o.overrides, "key.path=value, repeatable");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--scale", o.scale, "desk scale in (0, 1]: shrinks grids and step counts");
  sub->add_flag("--print-defaults", o.print_defaults, "print every key with its default and exit");
}

// JSON string literal, so a directory name is never read as a number
std::string quoted(const std::string& v) {
  std::string out = "\"";
  for (char ch : v) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  return out + "\"";
}

int report_error(dl_status s) {
  std::fprintf(stderr, "driftlimit: %s: %s\n", dl_status_string(s), dl_last_error());
  return s == DL_ERR_CONFIG || s == DL_ERR_ARGUMENT ? 2 : 1;
}

int run(dl_experiment kind, const Options& o) {
  if (o.print_defaults) {
    char* text = nullptr;
    const dl_status s = dl_default_config_json(kind, &text);
    if (s != DL_OK) return report_error(s);
    std::printf("%s\n", text);
    dl_string_free(text);
    return 0;
  }
  std::vector<std::string> ov = o.overrides;
  if (!o.out.empty()) ov.push_back("output.dir=" + quoted(o.out));
  if (o.scale != 0.0) ov.push_back("scale=" + std::to_string(o.scale));
  std::vector<const char*> argv;
  for (const auto& s : ov) argv.push_back(s.c_str());

  dl_config* cfg = nullptr;
  dl_status s = dl_config_load(kind, o.config.empty() ? nullptr : o.config.c_str(), argv.data(),
                               argv.size(), &cfg);
  if (s != DL_OK) return report_error(s);
  dl_report* rep = nullptr;
  s = dl_run(cfg, &rep);
  dl_config_free(cfg);
  if (s != DL_OK) return report_error(s);
  std::printf("%s\n", dl_report_json(rep));
  dl_report_free(rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotic-preserving two-fluid plasma solver and experiment harness"};
  app.set_version_flag("--version", std::string(dl_version()));
  app.require_subcommand(1);
  Options diff, sim, cst;
  auto* d = app.add_subcommand("diffusion-validate",
                               "manufactured anisotropic diffusion: h and tau convergence");
  auto* s = app.add_subcommand("simulate", "two-fluid run with the AP and/or classical scheme");
  auto* c = app.add_subcommand("c-study", "stability map over (C, dt)");
  add_common(d, diff);
  add_common(s, sim);
  add_common(c, cst);
  CLI11_PARSE(app, argc, argv);
  if (d->parsed()) return run(DL_DIFFUSION_VALIDATE, diff);
  if (s->parsed()) return run(DL_SIMULATE, sim);
  return run(DL_C_STUDY, cst);
}
