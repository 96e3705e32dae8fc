#include "driftlimit/classical_stepper.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace driftlimit {

void ClassicalStepConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
}

double stable_dt(const PlasmaState& s, const PhysParams& p, const Grid& g,
                 const ClassicalStepConfig& cfg) {
  cfg.validate();
  double cmax = 0.0;
  for (int a = 0; a < 2; ++a) {
    const double ca = std::sqrt(p.T(a) / (p.eps_alpha(a) * p.tau));
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      const Vec3& q = s.q[a][c];
      cmax = std::max(cmax, std::sqrt(dot(q, q)) / s.n[c] + ca);
    }
  }
  return cfg.cfl * g.h() / cmax;
}

Vec3 solve_rotation(const Vec3& r, const Vec3& B, double mu) {
  // v = r_par + (r_perp + mu r x B) / (1 + mu^2 |B|^2); the split keeps r_perp
  // from being swamped by mu^2 (r.B) B when mu |B| is large
  const double B2 = dot(B, B);
  if (!(B2 > 0.0) || mu == 0.0) return r;
  const Vec3 r_par = scale(dot(r, B) / B2, B);
  const Vec3 rot = axpy(mu, cross(r, B), sub(r, r_par));
  return axpy(1.0 / (1.0 + mu * mu * B2), rot, r_par);
}

CellVecField central_gradient(const CellField& u, const Grid& g) {
  check_size(u, g, "central_gradient");
  CellVecField out(g.num_cells(), Vec3{0, 0, 0});
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    const auto ijk = g.cell_ijk(c);
    for (int a = 0; a < g.dim(); ++a) {
      std::array<int, 3> lo = ijk, hi = ijk;
      lo[a] = std::max(ijk[a] - 1, 0);
      hi[a] = std::min(ijk[a] + 1, g.nc(a) - 1);
      out[c][a] = (u[g.cell(hi[0], hi[1], hi[2])] - u[g.cell(lo[0], lo[1], lo[2])]) /
                  (2.0 * g.d(a));
    }
  }
  return out;
}

double q_inf(const PlasmaState& s) {
  double m = 0.0;
  for (const auto& q : s.q)
    for (const Vec3& v : q)
      m = std::max({m, std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
  return m;
}

bool detect_blowup(const PlasmaState& s, double q0_inf) {
  if (!all_finite(s)) return true;
  return q_inf(s) > 1e6 * q0_inf;
}

StepResult step_classical(const PlasmaState& s, const FieldProvider& field, const PhysParams& p,
                          const Grid& g, const ClassicalStepConfig& cfg) {
  p.validate(true);
  cfg.validate();
  StepResult res;
  res.state = s;
  auto fail = [&](const std::string& msg) {
    res.diag.diverged = true;
    res.diag.message = msg;
    return res;
  };
  if (!all_finite(s)) return fail("input state is not finite");

  const std::shared_ptr<const MagneticField> bp = field(s.t + p.dt);
  const MagneticField& b = *bp;
  std::array<FVDivergence, 2> fv;
  for (int a = 0; a < 2; ++a) {
    FluxModel m;
    m.perp_mass = false;
    const double c2 = p.T(a) / (p.eps_alpha(a) * p.tau);
    if (cfg.fully_coupled)
      m.pressure = c2;
    else
      m.extra_speed = std::sqrt(c2);
    fv[a] = fv_divergence(s.n, s.q[a], b.b_cell(), g, m);
    if (!fv[a].positive) return fail("density not positive or state not finite");
  }

  PlasmaState& out = res.state;
  const double Ci = p.Ci(), Ce = p.Ce();
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    out.phi[c] = s.phi[c] - p.dt / (Ci - Ce) * (fv[kIon].mass[c] - fv[kElectron].mass[c]);
    out.n[c] = s.n[c] + Ci * (s.phi[c] - out.phi[c]) - p.dt * fv[kIon].mass[c];
  }

  const CellVecField gn = central_gradient(s.n, g);
  const CellVecField gphi = central_gradient(s.phi, g);
  double rot = 0.0, rmax = 0.0;
  for (int a = 0; a < 2; ++a) {
    const double ie = 1.0 / (p.eps_alpha(a) * p.tau);
    const double kp = cfg.fully_coupled ? 0.0 : p.T(a) * ie;
    const double mu = p.dt * p.charge(a) * ie;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      Vec3 f = fv[a].momentum[c];
      f = axpy(kp, gn[c], f);
      f = axpy(p.charge(a) * ie * s.n[c], gphi[c], f);
      const Vec3 r = axpy(-p.dt, f, s.q[a][c]);
      const Vec3 B = scale(b.mag_cell()[c], b.b_cell()[c]);
      const Vec3 v = solve_rotation(r, B, mu);
      const Vec3 chk = sub(axpy(-mu, cross(v, B), v), r);
      rot = std::max({rot, std::abs(chk[0]), std::abs(chk[1]), std::abs(chk[2])});
      rmax = std::max({rmax, std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
      out.q[a][c] = v;
    }
  }
  out.t = s.t + p.dt;
  res.diag.rotation_residual = rmax > 0.0 ? rot / rmax : rot;
  if (!all_finite(out)) return fail("state became non-finite");
  for (double v : out.n)
    if (!(v > 0.0)) return fail("density lost positivity");
  return res;
}

}  // namespace driftlimit
