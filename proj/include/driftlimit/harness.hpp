#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftlimit/ap_diffusion.hpp"
#include "driftlimit/ap_stepper.hpp"
#include "driftlimit/classical_stepper.hpp"

namespace driftlimit {

enum class Experiment { DiffusionValidate, Simulate, CStudy };
enum class SchemeSel { AP, Classical, Both };

struct DiffusionSetup {
  std::vector<int> grids{25, 50, 100, 200};
  std::vector<double> taus{1e-2, 1e-9};
  std::vector<double> tau_sweep{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};
  int sweep_n = 100;
  double oracle_tau = 1e-2;
  int oracle_n = 50;
};

struct CStudySetup {
  std::vector<double> C{1e-2, 1e-3, 1e-4};
  std::vector<double> dt{1e-6, 1e-7, 1e-8};
  std::vector<double> t_end{6e-6, 4e-6, 2e-6};  // one horizon per C
  double band = 0.1;                            // boundary band, fraction of cells per side
  double agreement = 0.05;                      // resolved-agreement threshold
  double artifact_factor = 10.0;
};

struct RunConfig {
  Experiment kind = Experiment::Simulate;
  int n = 100;  // cells per side of the square
  double lo = 1.0, hi = 2.0;
  PhysParams phys;
  SchemeSel scheme = SchemeSel::Both;
  double t_end = 6e-6;
  double alpha = 2.0943951023931953;  // 2 pi / 3
  double eta = 80.0, x0 = 1.5, y0 = 1.5, n0 = 1.0, phi0 = 0.0;
  std::string out_dir;   // empty: write nothing
  int dump_every = 0;    // steps between field dumps; 0 dumps the final state only
  ClassicalStepConfig classical;
  bool classical_stable_dt = false;  // classical run uses stable_dt of the initial state
  APStepOptions ap;
  DiffusionSetup diffusion;
  CStudySetup c_study;
  double scale = 1.0;
  std::string source_text;  // raw config document, if any

  Vec3 B() const;
};

// Default document of every key, the preset for the given experiment.
std::string default_config_json(Experiment kind);

// Merge a JSON document (may be empty) and key.path=value overrides onto the
// defaults.  Unknown keys and invalid values throw ConfigError naming the
// key path.
RunConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides,
                       Experiment kind);
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                      Experiment kind);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resolved configuration and derived parameters as a JSON document.
std::string resolved_config_json(const RunConfig& cfg);

// git-style object id: sha1("blob <len>\0" + content), lowercase hex.
std::string git_blob_hash(const std::string& content);

// Least-squares slope of log10(y) against log10(x).  Needs >= 3 points.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceRow {
  double x;
  Norms err;
};

struct ConvergenceTable {
  std::string axis;  // "h" or "tau"
  double fixed = 0;  // tau for an h-sweep, grid size for a tau-sweep
  std::vector<ConvergenceRow> rows;
  std::array<double, 3> slopes{0, 0, 0};  // L1, L2, Linf

  void fit();
  void write_csv(const std::string& path) const;
};

struct DiffusionReport {
  std::vector<ConvergenceTable> h_tables;
  ConvergenceTable tau_table;
  // |p(tau) - p(tau_min)| against tau: the distance to the discrete limit
  ConvergenceTable tau_limit_table;
  double oracle_rel_l2 = 0.0;  // micro-macro vs direct solve
  std::string warning;
};

// Manufactured problem on the configured square at n x n.
struct ManufacturedCase {
  Grid grid;
  std::shared_ptr<MagneticField> b;
  AnisoDiffusionProblem prob;
  CellField exact;  // p0 + tau p1 at cell centres
};
ManufacturedCase manufactured_case(int n, double tau, double lo = 1.0, double hi = 2.0);

DiffusionReport run_diffusion_validation(const RunConfig& cfg);

struct SchemeRun {
  std::string scheme;
  PlasmaState initial;
  PlasmaState final_state;
  int steps_requested = 0;
  int steps_done = 0;
  int diverged_step = 0;  // 1-based step that failed; 0 when none
  bool completed = false;
  bool consistent = true;   // every accepted AP step passed the residual check
  double worst_continuity_rel = 0.0;
  double worst_momentum_rel = 0.0;
  double worst_qperp_dot_b = 0.0;
  double worst_rotation = 0.0;
  std::string message;
};

PlasmaState initial_state(const RunConfig& cfg, const Grid& g);
Grid config_grid(const RunConfig& cfg);

// Advance one scheme to t_end; divergence is recorded, not thrown.
SchemeRun run_scheme(const RunConfig& cfg, bool ap, const std::string& out_subdir = "");

struct TwoFluidReport {
  std::optional<SchemeRun> ap;
  std::optional<SchemeRun> classical;
};

TwoFluidReport run_two_fluid(const RunConfig& cfg);

// |a - b|_2 / |b|_2 for one momentum component.
double rel_l2_component(const PlasmaState& a, const PlasmaState& b, int species, int comp,
                        const Grid& g);
// Same difference measured against |b - background|_2.
double rel_l2_perturbation(const PlasmaState& a, const PlasmaState& b, int species, int comp,
                           double background, const Grid& g);

enum class Verdict { Stable, BoundaryArtifacts, Diverged };
const char* verdict_name(Verdict v);

struct StabilityEntry {
  double C = 0, dt = 0, t_end = 0;
  Verdict verdict = Verdict::Stable;
  int steps = 0;
  int diverged_step = 0;
  double band_deviation = 0.0;  // boundary band, vs the smallest-dt run of the same C
  bool consistent = true;
};

struct CStudyReport {
  std::vector<StabilityEntry> entries;
  const StabilityEntry* find(double C, double dt) const;
};

CStudyReport run_c_study(const RunConfig& cfg);

// Writes meta.json into cfg.out_dir.
void write_meta(const RunConfig& cfg, const std::string& extra_json = "{}");

void write_fields_csv(const std::string& path, const PlasmaState& s, const Grid& g);

}  // namespace driftlimit
