#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <thread>

#include "driftlimit/harness.hpp"
#include "driftlimit/manufactured.hpp"

namespace driftlimit {

namespace fs = std::filesystem;
namespace mf = manufactured;

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("fit_slope: needs >= 3 paired points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_slope: values must be positive");
    const double lx = std::log10(x[i]), ly = std::log10(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit_slope: abscissae are all equal");
  return (n * sxy - sx * sy) / den;
}

void ConvergenceTable::fit() {
  std::vector<double> x, l1, l2, li;
  for (const auto& r : rows) {
    x.push_back(r.x);
    l1.push_back(r.err.l1);
    l2.push_back(r.err.l2);
    li.push_back(r.err.linf);
  }
  slopes = {fit_slope(x, l1), fit_slope(x, l2), fit_slope(x, li)};
}

void ConvergenceTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.precision(17);
  out << axis << ",L1,L2,Linf\n";
  for (const auto& r : rows) out << r.x << "," << r.err.l1 << "," << r.err.l2 << "," << r.err.linf << "\n";
  out << "slope," << slopes[0] << "," << slopes[1] << "," << slopes[2] << "\n";
}

ManufacturedCase manufactured_case(int n, double tau, double lo, double hi) {
  Grid g = build_grid(GridSpec::square2d(lo, hi, n, n));
  auto b = std::make_shared<MagneticField>(g, [](const Vec3& x) { return mf::b(x[0], x[1]); });
  ManufacturedCase mc{g, b, {}, {}};
  mc.prob.b = b.get();
  mc.prob.lambda = mf::kLambda;
  mc.prob.tau = tau;
  mc.prob.H.resize(g.num_nodes());
  for (std::size_t p = 0; p < g.num_nodes(); ++p) {
    const Vec3 x = g.node_coord(p);
    mc.prob.H[p] = mf::H(x[0], x[1]);
  }
  mc.prob.f.resize(g.num_cells());
  mc.exact.resize(g.num_cells());
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const Vec3 x = g.cell_center(c);
    mc.prob.f[c] = mf::rhs(x[0], x[1], tau);
    mc.exact[c] = mf::kP0 + tau * mf::p1(x[0], x[1]);
  }
  return mc;
}

namespace {

Norms diff_norms(const CellField& a, const CellField& b, const Grid& g) {
  CellField e(a.size());
  for (std::size_t c = 0; c < e.size(); ++c) e[c] = a[c] - b[c];
  return discrete_norms(e, g);
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0e", v);
  return buf;
}

fs::path ensure_dir(const std::string& d) {
  fs::create_directories(d);
  return fs::path(d);
}

}  // namespace

DiffusionReport run_diffusion_validation(const RunConfig& cfg) {
  const DiffusionSetup& d = cfg.diffusion;
  DiffusionReport rep;
  for (double tau : d.taus) {
    ConvergenceTable t;
    t.axis = "h";
    t.fixed = tau;
    for (int n : d.grids) {
      ManufacturedCase mc = manufactured_case(n, tau, cfg.lo, cfg.hi);
      const MicroMacroSolution s = solve_micro_macro(mc.prob, mc.grid, cfg.ap.solver);
      t.rows.push_back({mc.grid.h(), diff_norms(s.p, mc.exact, mc.grid)});
    }
    t.fit();
    rep.h_tables.push_back(t);
  }

  rep.tau_table.axis = "tau";
  rep.tau_table.fixed = d.sweep_n;
  rep.tau_limit_table.axis = "tau";
  rep.tau_limit_table.fixed = d.sweep_n;
  std::vector<double> taus = d.tau_sweep;
  std::sort(taus.begin(), taus.end(), std::greater<double>());
  std::vector<CellField> sols;
  std::optional<Grid> grid;
  for (double tau : taus) {
    ManufacturedCase mc = manufactured_case(d.sweep_n, tau, cfg.lo, cfg.hi);
    const MicroMacroSolution s = solve_micro_macro(mc.prob, mc.grid, cfg.ap.solver);
    rep.tau_table.rows.push_back({tau, diff_norms(s.p, CellField(s.p.size(), mf::kP0), mc.grid)});
    sols.push_back(s.p);
    grid = mc.grid;
  }
  rep.tau_table.fit();
  for (std::size_t i = 0; i + 1 < taus.size(); ++i)
    rep.tau_limit_table.rows.push_back({taus[i], diff_norms(sols[i], sols.back(), *grid)});
  if (rep.tau_limit_table.rows.size() >= 3) rep.tau_limit_table.fit();

  {
    ManufacturedCase mc = manufactured_case(d.oracle_n, d.oracle_tau, cfg.lo, cfg.hi);
    const MicroMacroSolution s = solve_micro_macro(mc.prob, mc.grid, cfg.ap.solver);
    const CellField direct = solve_direct(mc.prob, mc.grid);
    rep.oracle_rel_l2 =
        diff_norms(s.p, direct, mc.grid).l2 / discrete_norms(direct, mc.grid).l2;
    rep.warning = s.warning;
  }

  if (!cfg.out_dir.empty()) {
    const fs::path dir = ensure_dir(cfg.out_dir);
    for (const auto& t : rep.h_tables)
      t.write_csv((dir / ("convergence_h_tau" + tag(t.fixed) + ".csv")).string());
    rep.tau_table.write_csv((dir / "convergence_tau.csv").string());
    if (!rep.tau_limit_table.rows.empty())
      rep.tau_limit_table.write_csv((dir / "convergence_tau_limit.csv").string());
  }
  return rep;
}

Grid config_grid(const RunConfig& cfg) {
  return build_grid(GridSpec::square2d(cfg.lo, cfg.hi, cfg.n, cfg.n));
}

PlasmaState initial_state(const RunConfig& cfg, const Grid& g) {
  PlasmaState s;
  s.n.resize(g.num_cells());
  s.phi = g.cell_field(cfg.phi0);
  for (auto& q : s.q) q = g.cell_vec_field(cfg.B());
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const Vec3 x = g.cell_center(c);
    const double dx = x[0] - cfg.x0, dy = x[1] - cfg.y0;
    s.n[c] = cfg.n0 + cfg.phys.tau * std::max(0.0, 1.0 - cfg.eta * dx * dx - cfg.eta * dy * dy);
  }
  return s;
}

void write_fields_csv(const std::string& path, const PlasmaState& s, const Grid& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.precision(17);
  out << "x,y,n,phi,qi_x,qi_y,qi_z,qe_x,qe_y,qe_z\n";
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const Vec3 x = g.cell_center(c);
    out << x[0] << "," << x[1] << "," << s.n[c] << "," << s.phi[c];
    for (int a = 0; a < 2; ++a)
      for (int k = 0; k < 3; ++k) out << "," << s.q[a][c][k];
    out << "\n";
  }
}

namespace {

void write_diag_header(std::ostream& os) {
  os << "step,time,cont_rel_i,cont_rel_e,mom_rel_i,mom_rel_e,cont_noise_i,cont_noise_e,"
        "mom_noise_i,mom_noise_e,ap_node_i,ap_node_e,qperp_dot_b,rotation,"
        "it_n_macro,it_n_micro,it_phi_macro,it_phi_micro,diverged\n";
}

void write_diag_row(std::ostream& os, int step, double t, const StepDiagnostics& d) {
  os << step << "," << t << "," << d.continuity_rel[0] << "," << d.continuity_rel[1] << ","
     << d.momentum_rel[0] << "," << d.momentum_rel[1] << "," << d.continuity_noise[0] << ","
     << d.continuity_noise[1] << "," << d.momentum_noise[0] << "," << d.momentum_noise[1] << ","
     << d.ap_node[0] << "," << d.ap_node[1] << ","
     << std::max(d.qperp_dot_b[0], d.qperp_dot_b[1]) << "," << d.rotation_residual << ","
     << d.iterations[0] << "," << d.iterations[1] << "," << d.iterations[2] << ","
     << d.iterations[3] << "," << (d.diverged ? 1 : 0) << "\n";
}

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", t);
  return buf;
}

}  // namespace

SchemeRun run_scheme(const RunConfig& cfg, bool ap, const std::string& out_subdir) {
  const Grid g = config_grid(cfg);
  auto field =
      static_field(std::make_shared<const MagneticField>(MagneticField::uniform(g, cfg.B())));
  SchemeRun run;
  run.scheme = ap ? "ap" : "classical";
  run.initial = initial_state(cfg, g);
  PhysParams p = cfg.phys;
  if (!ap && cfg.classical_stable_dt) p.dt = stable_dt(run.initial, p, g, cfg.classical);
  run.steps_requested = std::max(1, static_cast<int>(std::llround(cfg.t_end / p.dt)));

  std::ofstream diag;
  fs::path dir;
  const bool write = !cfg.out_dir.empty();
  if (write) {
    dir = ensure_dir((fs::path(cfg.out_dir) / out_subdir).string());
    diag.open(dir / "diagnostics.csv");
    if (!diag) throw IoError("cannot write '" + (dir / "diagnostics.csv").string() + "'");
    diag.precision(10);
    write_diag_header(diag);
  }

  PlasmaState s = run.initial;
  const double q0 = q_inf(s);
  for (int k = 1; k <= run.steps_requested; ++k) {
    StepResult r = ap ? step_ap(s, field, p, g, cfg.ap) : step_classical(s, field, p, g, cfg.classical);
    const bool blown = !r.diag.diverged && detect_blowup(r.state, q0);
    if (blown) {
      r.diag.diverged = true;
      r.diag.message = "momentum exceeded 1e6 times its initial maximum";
    }
    if (write) write_diag_row(diag, k, s.t + p.dt, r.diag);
    if (r.diag.diverged) {
      run.diverged_step = k;
      run.message = r.diag.message;
      break;
    }
    if (ap) {
      run.consistent = run.consistent && r.diag.consistent();
      for (int a = 0; a < 2; ++a) {
        run.worst_continuity_rel = std::max(run.worst_continuity_rel, r.diag.continuity_rel[a]);
        run.worst_momentum_rel = std::max(run.worst_momentum_rel, r.diag.momentum_rel[a]);
        run.worst_qperp_dot_b = std::max(run.worst_qperp_dot_b, r.diag.qperp_dot_b[a]);
      }
    }
    run.worst_rotation = std::max(run.worst_rotation, r.diag.rotation_residual);
    s = std::move(r.state);
    run.steps_done = k;
    if (write && cfg.dump_every > 0 && k % cfg.dump_every == 0 && k != run.steps_requested)
      write_fields_csv((dir / ("fields_" + time_tag(s.t) + ".csv")).string(), s, g);
  }
  run.completed = run.diverged_step == 0;
  run.final_state = s;
  if (write) write_fields_csv((dir / ("fields_" + time_tag(s.t) + ".csv")).string(), s, g);
  return run;
}

TwoFluidReport run_two_fluid(const RunConfig& cfg) {
  TwoFluidReport rep;
  if (cfg.scheme != SchemeSel::Classical) rep.ap = run_scheme(cfg, true, "ap");
  if (cfg.scheme != SchemeSel::AP) rep.classical = run_scheme(cfg, false, "classical");
  return rep;
}

double rel_l2_component(const PlasmaState& a, const PlasmaState& b, int species, int comp,
                        const Grid& g) {
  (void)g;  // uniform cell volume cancels
  double d = 0.0, r = 0.0;
  for (std::size_t c = 0; c < a.q[species].size(); ++c) {
    const double x = a.q[species][c][comp], y = b.q[species][c][comp];
    d += (x - y) * (x - y);
    r += y * y;
  }
  return r > 0.0 ? std::sqrt(d / r) : std::sqrt(d);
}

double rel_l2_perturbation(const PlasmaState& a, const PlasmaState& b, int species, int comp,
                           double background, const Grid& g) {
  (void)g;
  double d = 0.0, r = 0.0;
  for (std::size_t c = 0; c < a.q[species].size(); ++c) {
    const double x = a.q[species][c][comp], y = b.q[species][c][comp];
    d += (x - y) * (x - y);
    r += (y - background) * (y - background);
  }
  return r > 0.0 ? std::sqrt(d / r) : std::sqrt(d);
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::BoundaryArtifacts: return "boundary-artifacts";
    case Verdict::Diverged: return "diverged";
  }
  return "stable";
}

const StabilityEntry* CStudyReport::find(double C, double dt) const {
  for (const auto& e : entries)
    if (std::abs(e.C - C) <= 1e-12 * C && std::abs(e.dt - dt) <= 1e-12 * dt) return &e;
  return nullptr;
}

namespace {

// |q_i,x - ref| over the outer band of cells, relative to the perturbation
// of ref over the whole domain.
double band_deviation(const PlasmaState& s, const PlasmaState& ref, double background,
                      double band, const Grid& g) {
  const int w = std::max(1, static_cast<int>(std::lround(band * g.nc(0))));
  double d = 0.0, r = 0.0;
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const auto ijk = g.cell_ijk(c);
    const int dist = std::min({ijk[0], ijk[1], g.nc(0) - 1 - ijk[0], g.nc(1) - 1 - ijk[1]});
    const double y = ref.q[kIon][c][0];
    r += (y - background) * (y - background);
    if (dist < w) {
      const double e = s.q[kIon][c][0] - y;
      d += e * e;
    }
  }
  return r > 0.0 ? std::sqrt(d / r) : std::sqrt(d);
}

}  // namespace

CStudyReport run_c_study(const RunConfig& cfg) {
  const CStudySetup& cs = cfg.c_study;
  struct Job {
    std::size_t row;
    double dt;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < cs.C.size(); ++i)
    for (double dt : cs.dt) jobs.push_back({i, dt});

  auto run_job = [&](const Job& j) {
    RunConfig c = cfg;
    c.phys.C = cs.C[j.row];
    c.phys.dt = j.dt;
    c.t_end = cs.t_end[j.row];
    c.scheme = SchemeSel::AP;
    c.out_dir.clear();
    return run_scheme(c, true);
  };

  // independent runs; results are collected in job order, so the output does
  // not depend on the thread count
  std::vector<SchemeRun> runs(jobs.size());
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < jobs.size(); start += hw) {
    std::vector<std::future<SchemeRun>> fut;
    const std::size_t end = std::min(jobs.size(), start + hw);
    if (hw == 1) {
      runs[start] = run_job(jobs[start]);
      continue;
    }
    for (std::size_t k = start; k < end; ++k)
      fut.push_back(std::async(std::launch::async, run_job, jobs[k]));
    for (std::size_t k = start; k < end; ++k) runs[k] = fut[k - start].get();
  }

  const Grid g = config_grid(cfg);
  const double bx = cfg.B()[0];
  CStudyReport rep;
  for (std::size_t i = 0; i < cs.C.size(); ++i) {
    // reference: the smallest dt of this C that completed
    const SchemeRun* ref = nullptr;
    double ref_dt = 0.0;
    for (std::size_t k = 0; k < jobs.size(); ++k)
      if (jobs[k].row == i && runs[k].completed && (!ref || jobs[k].dt < ref_dt)) {
        ref = &runs[k];
        ref_dt = jobs[k].dt;
      }
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      if (jobs[k].row != i) continue;
      StabilityEntry e;
      e.C = cs.C[i];
      e.dt = jobs[k].dt;
      e.t_end = cs.t_end[i];
      e.steps = runs[k].steps_done;
      e.diverged_step = runs[k].diverged_step;
      e.consistent = runs[k].consistent;
      if (!runs[k].completed) {
        e.verdict = Verdict::Diverged;
      } else {
        e.band_deviation = ref ? band_deviation(runs[k].final_state, ref->final_state, bx,
                                                cs.band, g)
                               : 0.0;
        e.verdict = e.band_deviation > cs.artifact_factor * cs.agreement
                        ? Verdict::BoundaryArtifacts
                        : Verdict::Stable;
      }
      rep.entries.push_back(e);
    }
  }

  if (!cfg.out_dir.empty()) {
    const fs::path dir = ensure_dir(cfg.out_dir);
    std::ofstream out(dir / "stability_map.csv");
    if (!out) throw IoError("cannot write stability_map.csv");
    out.precision(10);
    out << "C,dt,verdict,t_end,steps,diverged_step,band_deviation,consistent\n";
    for (const auto& e : rep.entries)
      out << e.C << "," << e.dt << "," << verdict_name(e.verdict) << "," << e.t_end << ","
          << e.steps << "," << e.diverged_step << "," << e.band_deviation << ","
          << (e.consistent ? 1 : 0) << "\n";
  }
  return rep;
}

}  // namespace driftlimit
