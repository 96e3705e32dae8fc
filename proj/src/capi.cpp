#include "driftlimit/driftlimit.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "driftlimit/harness.hpp"
#include "json.hpp"

using namespace driftlimit;
using json = nlohmann::ordered_json;

struct dl_config {
  RunConfig cfg;
};

struct dl_report {
  std::string text;
};

struct dl_sim {
  RunConfig cfg;
  Grid grid;
  FieldProvider field;
  PhysParams phys;
  bool ap;
  PlasmaState state;
  double q0;
  StepDiagnostics last;
  bool diverged = false;
};

namespace {

thread_local std::string g_error;

dl_status fail(dl_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

template <class F>
dl_status guarded(F&& f) {
  try {
    g_error.clear();
    return f();
  } catch (const ConfigError& e) {
    return fail(DL_ERR_CONFIG, e.what());
  } catch (const SolverError& e) {
    return fail(DL_ERR_SOLVER, e.what());
  } catch (const IoError& e) {
    return fail(DL_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DL_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(DL_ERR_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DL_ERR_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

Experiment to_kind(dl_experiment k) {
  switch (k) {
    case DL_DIFFUSION_VALIDATE: return Experiment::DiffusionValidate;
    case DL_SIMULATE: return Experiment::Simulate;
    case DL_C_STUDY: return Experiment::CStudy;
  }
  throw std::invalid_argument("unknown experiment kind");
}

std::vector<std::string> to_vec(const char* const* ov, std::size_t n) {
  std::vector<std::string> out;
  if (n > 0 && !ov) throw std::invalid_argument("overrides is NULL but n_overrides > 0");
  for (std::size_t i = 0; i < n; ++i) {
    if (!ov[i]) throw std::invalid_argument("override entry is NULL");
    out.emplace_back(ov[i]);
  }
  return out;
}

json table_json(const ConvergenceTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back({r.x, r.err.l1, r.err.l2, r.err.linf});
  return {{"axis", t.axis},
          {"fixed", t.fixed},
          {"rows", rows},
          {"slopes", {{"L1", t.slopes[0]}, {"L2", t.slopes[1]}, {"Linf", t.slopes[2]}}}};
}

json run_json(const SchemeRun& r) {
  return {{"scheme", r.scheme},
          {"completed", r.completed},
          {"steps_requested", r.steps_requested},
          {"steps_done", r.steps_done},
          {"diverged_step", r.diverged_step},
          {"message", r.message},
          {"consistent", r.consistent},
          {"worst_continuity_rel", r.worst_continuity_rel},
          {"worst_momentum_rel", r.worst_momentum_rel},
          {"worst_qperp_dot_b", r.worst_qperp_dot_b},
          {"worst_rotation", r.worst_rotation}};
}

json summary(const RunConfig& cfg) {
  json out;
  switch (cfg.kind) {
    case Experiment::DiffusionValidate: {
      const DiffusionReport rep = run_diffusion_validation(cfg);
      json h = json::array();
      for (const auto& t : rep.h_tables) h.push_back(table_json(t));
      out = {{"h_sweeps", h},
             {"tau_sweep", table_json(rep.tau_table)},
             {"tau_limit", table_json(rep.tau_limit_table)},
             {"oracle_rel_l2", rep.oracle_rel_l2}};
      break;
    }
    case Experiment::Simulate: {
      const TwoFluidReport rep = run_two_fluid(cfg);
      if (rep.ap) out["ap"] = run_json(*rep.ap);
      if (rep.classical) out["classical"] = run_json(*rep.classical);
      if (rep.ap && rep.classical && rep.ap->completed && rep.classical->completed) {
        const Grid g = config_grid(cfg);
        const Vec3 B = cfg.B();
        json cmp = json::object();
        const char* names[2][2] = {{"qi_x", "qi_y"}, {"qe_x", "qe_y"}};
        for (int a = 0; a < 2; ++a)
          for (int k = 0; k < 2; ++k)
            cmp[names[a][k]] = {
                {"rel_l2", rel_l2_component(rep.ap->final_state, rep.classical->final_state, a,
                                            k, g)},
                {"rel_l2_perturbation",
                 rel_l2_perturbation(rep.ap->final_state, rep.classical->final_state, a, k,
                                     B[k], g)}};
        out["ap_vs_classical"] = cmp;
      }
      break;
    }
    case Experiment::CStudy: {
      const CStudyReport rep = run_c_study(cfg);
      json e = json::array();
      for (const auto& s : rep.entries)
        e.push_back({{"C", s.C},
                     {"dt", s.dt},
                     {"verdict", verdict_name(s.verdict)},
                     {"steps", s.steps},
                     {"diverged_step", s.diverged_step},
                     {"band_deviation", s.band_deviation},
                     {"consistent", s.consistent}});
      out = {{"entries", e}};
      break;
    }
  }
  return out;
}

}  // namespace

extern "C" {

const char* dl_version(void) { return "1.0.0"; }

const char* dl_last_error(void) { return g_error.c_str(); }

const char* dl_status_string(dl_status s) {
  switch (s) {
    case DL_OK: return "ok";
    case DL_ERR_ARGUMENT: return "invalid argument";
    case DL_ERR_CONFIG: return "configuration error";
    case DL_ERR_SOLVER: return "solver failure";
    case DL_ERR_IO: return "i/o error";
    case DL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void dl_string_free(char* s) { std::free(s); }

dl_status dl_default_config_json(dl_experiment kind, char** out) {
  return guarded([&] {
    if (!out) return fail(DL_ERR_ARGUMENT, "out is NULL");
    *out = dup(default_config_json(to_kind(kind)));
    return DL_OK;
  });
}

dl_status dl_config_load(dl_experiment kind, const char* path, const char* const* overrides,
                         size_t n_overrides, dl_config** out) {
  return guarded([&] {
    if (!out) return fail(DL_ERR_ARGUMENT, "out is NULL");
    *out = nullptr;
    auto c = std::make_unique<dl_config>();
    c->cfg = load_config(path ? path : "", to_vec(overrides, n_overrides), to_kind(kind));
    *out = c.release();
    return DL_OK;
  });
}

dl_status dl_config_parse(dl_experiment kind, const char* json_text, const char* const* overrides,
                          size_t n_overrides, dl_config** out) {
  return guarded([&] {
    if (!out) return fail(DL_ERR_ARGUMENT, "out is NULL");
    *out = nullptr;
    auto c = std::make_unique<dl_config>();
    c->cfg = parse_config(json_text ? json_text : "", to_vec(overrides, n_overrides),
                          to_kind(kind));
    *out = c.release();
    return DL_OK;
  });
}

dl_status dl_config_resolved_json(const dl_config* cfg, char** out) {
  return guarded([&] {
    if (!cfg || !out) return fail(DL_ERR_ARGUMENT, "NULL argument");
    *out = dup(resolved_config_json(cfg->cfg));
    return DL_OK;
  });
}

void dl_config_free(dl_config* cfg) { delete cfg; }

dl_status dl_run(const dl_config* cfg, dl_report** out) {
  return guarded([&] {
    if (!cfg || !out) return fail(DL_ERR_ARGUMENT, "NULL argument");
    *out = nullptr;
    const json s = summary(cfg->cfg);
    write_meta(cfg->cfg, s.dump());
    auto r = std::make_unique<dl_report>();
    r->text = s.dump(2);
    *out = r.release();
    return DL_OK;
  });
}

const char* dl_report_json(const dl_report* rep) { return rep ? rep->text.c_str() : ""; }

void dl_report_free(dl_report* rep) { delete rep; }

dl_status dl_sim_create(const dl_config* cfg, dl_scheme scheme, dl_sim** out) {
  return guarded([&] {
    if (!cfg || !out) return fail(DL_ERR_ARGUMENT, "NULL argument");
    if (scheme != DL_SCHEME_AP && scheme != DL_SCHEME_CLASSICAL)
      return fail(DL_ERR_ARGUMENT, "unknown scheme");
    *out = nullptr;
    const RunConfig& c = cfg->cfg;
    Grid g = config_grid(c);
    auto sim = std::unique_ptr<dl_sim>(new dl_sim{
        c, g, static_field(std::make_shared<const MagneticField>(MagneticField::uniform(g, c.B()))),
        c.phys, scheme == DL_SCHEME_AP, initial_state(c, g), 0.0, {}, false});
    sim->phys.validate(true);
    sim->q0 = q_inf(sim->state);
    if (!sim->ap && c.classical_stable_dt)
      sim->phys.dt = stable_dt(sim->state, sim->phys, g, c.classical);
    *out = sim.release();
    return DL_OK;
  });
}

dl_status dl_sim_step(dl_sim* sim, int nsteps, int* diverged) {
  return guarded([&] {
    if (!sim || nsteps < 0) return fail(DL_ERR_ARGUMENT, "NULL sim or negative step count");
    for (int k = 0; k < nsteps && !sim->diverged; ++k) {
      StepResult r = sim->ap ? step_ap(sim->state, sim->field, sim->phys, sim->grid, sim->cfg.ap)
                             : step_classical(sim->state, sim->field, sim->phys, sim->grid,
                                              sim->cfg.classical);
      sim->last = r.diag;
      if (r.diag.diverged || detect_blowup(r.state, sim->q0)) {
        sim->diverged = true;
        break;
      }
      sim->state = std::move(r.state);
    }
    if (diverged) *diverged = sim->diverged ? 1 : 0;
    return DL_OK;
  });
}

double dl_sim_time(const dl_sim* sim) { return sim ? sim->state.t : 0.0; }

size_t dl_sim_num_cells(const dl_sim* sim) { return sim ? sim->grid.num_cells() : 0; }

dl_status dl_sim_get(const dl_sim* sim, dl_quantity q, double* buf, size_t len) {
  return guarded([&] {
    if (!sim || !buf) return fail(DL_ERR_ARGUMENT, "NULL argument");
    const std::size_t n = sim->grid.num_cells();
    if (len < n) return fail(DL_ERR_ARGUMENT, "buffer shorter than the number of cells");
    const PlasmaState& s = sim->state;
    for (std::size_t c = 0; c < n; ++c) {
      switch (q) {
        case DL_N: buf[c] = s.n[c]; break;
        case DL_PHI: buf[c] = s.phi[c]; break;
        case DL_QI_X: case DL_QI_Y: case DL_QI_Z: buf[c] = s.q[kIon][c][q - DL_QI_X]; break;
        case DL_QE_X: case DL_QE_Y: case DL_QE_Z: buf[c] = s.q[kElectron][c][q - DL_QE_X]; break;
        default: return fail(DL_ERR_ARGUMENT, "unknown quantity");
      }
    }
    return DL_OK;
  });
}

dl_status dl_sim_residuals(const dl_sim* sim, double out[6]) {
  return guarded([&] {
    if (!sim || !out) return fail(DL_ERR_ARGUMENT, "NULL argument");
    const StepDiagnostics& d = sim->last;
    const double v[6] = {d.continuity_rel[0], d.continuity_rel[1], d.momentum_rel[0],
                         d.momentum_rel[1],   d.ap_node[0],        d.ap_node[1]};
    std::memcpy(out, v, sizeof v);
    return DL_OK;
  });
}

void dl_sim_free(dl_sim* sim) { delete sim; }

}  // extern "C"
