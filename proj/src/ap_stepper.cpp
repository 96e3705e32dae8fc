#include "driftlimit/ap_stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace driftlimit {

namespace {

double cell_l2(const CellField& u, const Grid& g) { return discrete_norms(u, g).l2; }

double cell_l2(const CellVecField& u, const Grid& g) {
  double s = 0.0;
  for (const Vec3& v : u) s += dot(v, v);
  return std::sqrt(s * g.cell_volume());
}

// b_* . node_avg(v), a node scalar.
NodeField b_dot_navg(const CellVecField& v, const MagneticField& b, const Grid& g) {
  const NodeVecField va = node_average(v, g);
  NodeField w(g.num_nodes());
  for (std::size_t p = 0; p < w.size(); ++p) w[p] = dot(b.b_node()[p], va[p]);
  return w;
}

// dh_star(b_* . node_avg(q_i + wq q_e + dt-weighted explicit terms)) and the
// perpendicular mass part, combined with electron weight we.
CellField combined_flux(const PlasmaState& s, const ExplicitTerms& ex, const MagneticField& b,
                        double we, const PhysParams& p, const Grid& g) {
  const double inv_dt = 1.0 / p.dt;
  CellVecField v(g.num_cells());
  for (std::size_t c = 0; c < v.size(); ++c) {
    const Vec3 qsum = axpy(we, s.q[kElectron][c], s.q[kIon][c]);
    const Vec3 fsum = axpy(we, ex.fv[kElectron].momentum[c], ex.fv[kIon].momentum[c]);
    v[c] = axpy(-inv_dt, qsum, fsum);
  }
  CellField out = apply_dhstar(b_dot_navg(v, b, g), b, g);
  for (std::size_t c = 0; c < out.size(); ++c)
    out[c] -= inv_dt * (ex.fv[kIon].mass[c] + we * ex.fv[kElectron].mass[c]);
  return out;
}

void require_perp_mass(const FluxModel& m) {
  if (!m.perp_mass)
    throw std::invalid_argument("AP step: the explicit mass flux must be the perpendicular part");
}

}  // namespace

double node_l2(const NodeField& w, const Grid& g) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return std::sqrt(s * g.cell_volume());
}

ExplicitTerms explicit_terms(const PlasmaState& s, const MagneticField& b, const Grid& g,
                             const FluxModel& m) {
  require_perp_mass(m);
  ExplicitTerms ex;
  for (int a = 0; a < 2; ++a) ex.fv[a] = fv_divergence(s.n, s.q[a], b.b_cell(), g, m);
  return ex;
}

CellField assemble_R_flux(const PlasmaState& s, const ExplicitTerms& ex, const MagneticField& b,
                          const PhysParams& p, const Grid& g) {
  CellField r = combined_flux(s, ex, b, p.eps, p, g);
  const double k = 1.0 / (1.0 + p.Te);
  for (double& v : r) v *= k;
  return r;
}

CellField assemble_R(const PlasmaState& s, const ExplicitTerms& ex, const MagneticField& b,
                     const PhysParams& p, const Grid& g) {
  CellField r = assemble_R_flux(s, ex, b, p, g);
  const double l1 = p.lambda1();
  for (std::size_t c = 0; c < r.size(); ++c) r[c] += l1 * s.n[c];
  return r;
}

CellField assemble_R(const PlasmaState& s, const MagneticField& b, const PhysParams& p,
                     const Grid& g) {
  return assemble_R(s, explicit_terms(s, b, g), b, p, g);
}

CellField assemble_S_flux(const PlasmaState& s, const CellField& dn, const ExplicitTerms& ex,
                          const MagneticField& b, const PhysParams& p, const Grid& g) {
  check_size(dn, g, "assemble_S");
  CellField r = combined_flux(s, ex, b, -p.eps / p.Te, p, g);
  const double kn = (p.eps - p.Te) / (p.dt * p.dt * p.Te);
  const double k = p.potential_factor();
  for (std::size_t c = 0; c < r.size(); ++c) r[c] = k * (r[c] + kn * dn[c]);
  return r;
}

CellField assemble_S(const PlasmaState& s, const CellField& n_new, const ExplicitTerms& ex,
                     const MagneticField& b, const PhysParams& p, const Grid& g) {
  check_size(n_new, g, "assemble_S");
  CellField dn(n_new.size());
  for (std::size_t c = 0; c < dn.size(); ++c) dn[c] = n_new[c] - s.n[c];
  CellField r = assemble_S_flux(s, dn, ex, b, p, g);
  const double l2 = p.lambda2();
  for (std::size_t c = 0; c < r.size(); ++c) r[c] += l2 * s.phi[c];
  return r;
}

CellField assemble_S(const PlasmaState& s, const CellField& n_new, const MagneticField& b,
                     const PhysParams& p, const Grid& g) {
  return assemble_S(s, n_new, explicit_terms(s, b, g), b, p, g);
}

NodeVecField node_force(const CellField& n, const CellField& phi, int species,
                        const PhysParams& p, const Grid& g) {
  const NodeVecField gn = apply_grad_star(n, g);
  const NodeVecField gphi = apply_grad_star(phi, g);
  const NodeField ns = node_average(n, g);
  const double T = p.T(species), qa = p.charge(species);
  NodeVecField out(g.num_nodes());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = axpy(qa * ns[k], gphi[k], scale(T, gn[k]));
  return out;
}

Vec3 solve_perp_rotation(const Vec3& r_perp, const Vec3& b, double gamma) {
  const Vec3 br = cross(b, r_perp);
  return scale(1.0 / (1.0 + gamma * gamma), axpy(gamma, br, r_perp));
}

namespace {

// Diffusion solve in level or increment form.  Returns the new level.
CellField solve_level(const MagneticField& b, const NodeField& H, double lambda, double tau,
                      const CellField& level, const CellField& src_flux, bool increments,
                      const SolverOptions& so, const Grid& g, CellField& delta,
                      std::array<int, 4>& iters, int slot) {
  AnisoDiffusionProblem prob;
  prob.b = &b;
  prob.H = H;
  prob.lambda = lambda;
  prob.tau = tau;
  prob.f.resize(g.num_cells());
  if (increments) {
    // -dh_star(H dh d) + tau lambda d = tau src + dh_star(H dh level)
    NodeField w = apply_dh(level, b, g);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] *= H[k];
    const CellField a = apply_dhstar(w, b, g);
    for (std::size_t c = 0; c < a.size(); ++c) prob.f[c] = src_flux[c] + a[c] / tau;
  } else {
    for (std::size_t c = 0; c < level.size(); ++c) prob.f[c] = src_flux[c] + lambda * level[c];
  }
  SolverOptions opt = so;
  opt.check_kernel = false;  // with tau > 0 the macro part is only an intermediate
  const MicroMacroSolution sol = solve_micro_macro(prob, g, opt);
  iters[slot] = sol.h_solve.iterations;
  iters[slot + 1] = sol.l_solve.iterations;
  CellField out(level.size());
  delta.resize(level.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (increments) {
      delta[c] = sol.p[c];
      out[c] = level[c] + sol.p[c];
    } else {
      out[c] = sol.p[c];
      delta[c] = sol.p[c] - level[c];
    }
  }
  return out;
}

}  // namespace

StepResult step_ap(const PlasmaState& s, const FieldProvider& field, const PhysParams& p,
                   const Grid& g, const APStepOptions& opt, StepIncrements* increments) {
  p.validate(true);
  require_perp_mass(opt.flux);
  StepResult res;
  res.state = s;
  auto fail = [&](const std::string& msg) {
    res.diag.diverged = true;
    res.diag.message = msg;
    return res;
  };
  if (!all_finite(s)) return fail("input state is not finite");
  for (double v : s.n)
    if (!(v > 0.0)) return fail("input density is not positive");

  const std::shared_ptr<const MagneticField> bp = field(s.t + p.dt);
  const MagneticField& b = *bp;
  const ExplicitTerms ex = explicit_terms(s, b, g, opt.flux);
  if (!ex.fv[0].positive || !ex.fv[1].positive) return fail("explicit fluxes not finite");

  StepIncrements inc;
  PlasmaState& out = res.state;
  try {
    const CellField rf = assemble_R_flux(s, ex, b, p, g);
    out.n = solve_level(b, g.node_field(1.0), p.lambda1(), p.tau, s.n, rf, opt.increment_form,
                        opt.solver, g, inc.dn, res.diag.iterations, 0);
    for (double v : out.n)
      if (!(v > 0.0) || !std::isfinite(v)) return fail("density lost positivity");
    const CellField sf = assemble_S_flux(s, inc.dn, ex, b, p, g);
    const NodeField H = node_average(out.n, g);
    out.phi = solve_level(b, H, p.lambda2(), p.tau, s.phi, sf, opt.increment_form, opt.solver,
                          g, inc.dphi, res.diag.iterations, 2);
  } catch (const SolverError& e) {
    return fail(e.what());
  }

  const auto& bn = b.b_node();
  const auto& bc = b.b_cell();
  const auto& mag = b.mag_cell();
  double rot = 0.0, rmax = 0.0;
  for (int a = 0; a < 2; ++a) {
    const NodeVecField G = node_force(out.n, out.phi, a, p, g);
    NodeVecField Gpar(G.size());
    for (std::size_t k = 0; k < G.size(); ++k) Gpar[k] = parallel(bn[k], G[k]);
    const CellVecField P = cell_from_nodes(Gpar, g);
    const CellVecField F = cell_from_nodes(G, g);
    const double ea = p.eps_alpha(a), qa = p.charge(a);
    const double kf = p.dt / (ea * p.tau);
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      const Vec3& b_c = bc[c];
      const Vec3 expl = axpy(-p.dt, ex.fv[a].momentum[c], s.q[a][c]);
      const Vec3 qpar = sub(parallel(b_c, expl), scale(kf, parallel(b_c, P[c])));
      const Vec3 src = axpy(-1.0 / p.dt, s.q[a][c], ex.fv[a].momentum[c]);
      const Vec3 r = perp(b_c, add(scale(qa / mag[c], cross(b_c, F[c])),
                                   scale(qa * ea * p.tau / mag[c], cross(b_c, src))));
      const double gamma = qa * ea * p.tau / (p.dt * mag[c]);
      const Vec3 v = solve_perp_rotation(r, b_c, gamma);
      const Vec3 chk = sub(axpy(-gamma, cross(b_c, v), v), r);
      rot = std::max(rot, std::max({std::abs(chk[0]), std::abs(chk[1]), std::abs(chk[2])}));
      rmax = std::max(rmax, std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])}));
      res.diag.qperp_dot_b[a] = std::max(res.diag.qperp_dot_b[a], std::abs(dot(v, b_c)));
      out.q[a][c] = add(qpar, v);
    }
  }
  out.t = s.t + p.dt;
  res.diag.rotation_residual = rmax > 0.0 ? rot / rmax : rot;
  if (!all_finite(out)) return fail("state became non-finite");

  const StepDiagnostics r = step_residuals(s, out, b, p, g, &inc);
  res.diag.continuity = r.continuity;
  res.diag.continuity_rel = r.continuity_rel;
  res.diag.momentum = r.momentum;
  res.diag.momentum_rel = r.momentum_rel;
  res.diag.continuity_noise = r.continuity_noise;
  res.diag.momentum_noise = r.momentum_noise;
  res.diag.ap_node = r.ap_node;
  if (increments) *increments = std::move(inc);
  return res;
}

StepDiagnostics step_residuals(const PlasmaState& s, const PlasmaState& s_new,
                               const MagneticField& b, const PhysParams& p, const Grid& g,
                               const StepIncrements* increments) {
  StepDiagnostics d;
  const std::size_t nc = g.num_cells();
  CellField dn(nc), dphi(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    dn[c] = increments ? increments->dn[c] : s_new.n[c] - s.n[c];
    dphi[c] = increments ? increments->dphi[c] : s_new.phi[c] - s.phi[c];
  }
  const ExplicitTerms ex = explicit_terms(s, b, g);
  const auto& bn = b.b_node();
  const auto& bc = b.b_cell();
  const auto& mag = b.mag_cell();
  auto rel = [](double res, double scale) { return scale > 0.0 ? res / scale : res; };
  // Round-off floor: terms that cancel in floating point (the stiff node
  // force, the Lorentz term, level differences) carry errors of order eps
  // times the size of their operands.  A stationary state has every term at
  // this floor, so the relative residual alone has no meaning there.
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  double stencil = 0.0;
  for (const Vec3& v : bn) {
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) s += std::abs(v[a]) / g.d(a);
    stencil = std::max(stencil, s);
  }
  double n_inf = 0.0;
  for (double v : s_new.n) n_inf = std::max(n_inf, std::abs(v));
  const double n_l2 = cell_l2(s_new.n, g), phi_l2 = cell_l2(s_new.phi, g);

  for (int a = 0; a < 2; ++a) {
    const double ea = p.eps_alpha(a), qa = p.charge(a);
    const double kf = p.dt / (ea * p.tau);
    const NodeVecField G = node_force(s_new.n, s_new.phi, a, p, g);

    // continuity: the implicit parallel flux is the node-level expression
    // the scheme substitutes, not a re-averaged cell momentum
    CellVecField expl(nc);
    for (std::size_t c = 0; c < nc; ++c) expl[c] = axpy(-p.dt, ex.fv[a].momentum[c], s.q[a][c]);
    const CellField div_expl = apply_dhstar(b_dot_navg(expl, b, g), b, g);
    NodeField bG(g.num_nodes());
    for (std::size_t k = 0; k < bG.size(); ++k) bG[k] = dot(bn[k], G[k]);
    const CellField div_force = apply_dhstar(bG, b, g);
    CellField res(nc), t1(nc), t2(nc), t4(nc);
    const double Ca = p.C_alpha(a);
    for (std::size_t c = 0; c < nc; ++c) {
      t1[c] = dn[c] / p.dt;
      t2[c] = Ca * dphi[c] / p.dt;
      t4[c] = kf * div_force[c];
      res[c] = t1[c] + t2[c] + div_expl[c] - t4[c] + ex.fv[a].mass[c];
    }
    d.continuity[a] = cell_l2(res, g);
    const double gross = std::max(kf * stencil * stencil * (p.T(a) * n_l2 + n_inf * phi_l2),
                                  stencil * cell_l2(expl, g));
    const double cs = std::max({cell_l2(t1, g), cell_l2(t2, g), cell_l2(div_expl, g),
                                cell_l2(t4, g), cell_l2(ex.fv[a].mass, g)});
    d.continuity_noise[a] = rel(d.continuity[a], kEps * gross);
    d.continuity_rel[a] = rel(d.continuity[a], cs);

    // momentum
    NodeVecField Gpar(G.size());
    for (std::size_t k = 0; k < G.size(); ++k) Gpar[k] = parallel(bn[k], G[k]);
    const CellVecField P = cell_from_nodes(Gpar, g);
    const CellVecField F = cell_from_nodes(G, g);
    CellVecField m(nc), m1(nc), m3(nc), m4(nc), m5(nc);
    const double ie = 1.0 / (ea * p.tau);
    CellField q_abs(nc), lorentz_abs(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      q_abs[c] = std::sqrt(dot(s_new.q[a][c], s_new.q[a][c]));
      lorentz_abs[c] = ie * mag[c] * q_abs[c];
      m1[c] = scale(1.0 / p.dt, sub(s_new.q[a][c], s.q[a][c]));
      m3[c] = scale(ie, parallel(bc[c], P[c]));
      m4[c] = scale(ie, perp(bc[c], F[c]));
      m5[c] = scale(-ie * qa * mag[c], cross(s_new.q[a][c], bc[c]));
      m[c] = add(add(add(m1[c], ex.fv[a].momentum[c]), add(m3[c], m4[c])), m5[c]);
    }
    d.momentum[a] = cell_l2(m, g);
    const double ms = std::max({cell_l2(m1, g), cell_l2(ex.fv[a].momentum, g), cell_l2(m3, g),
                                cell_l2(m4, g), cell_l2(m5, g)});
    d.momentum_noise[a] =
        rel(d.momentum[a], kEps * std::max(cell_l2(lorentz_abs, g), cell_l2(q_abs, g) / p.dt));
    d.momentum_rel[a] = rel(d.momentum[a], ms);

    d.ap_node[a] = node_l2(bG, g);
  }
  return d;
}

}  // namespace driftlimit
