#include <cmath>
#include <limits>

#include "doctest.h"
#include "driftlimit/classical_stepper.hpp"
#include "driftlimit/harness.hpp"
#include "helpers.hpp"

using namespace driftlimit;
using testing_util::random_unit;

namespace {

struct Setup {
  RunConfig cfg;
  Grid grid;
  std::shared_ptr<const MagneticField> b;
  PlasmaState state;
};

Setup make(int n, double eta, double tau = 1e-8, double dt = 5e-9) {
  RunConfig cfg;
  cfg.n = n;
  cfg.eta = eta;
  cfg.phys.tau = tau;
  cfg.phys.dt = dt;
  Grid g = config_grid(cfg);
  auto b = std::make_shared<const MagneticField>(MagneticField::uniform(g, cfg.B()));
  PlasmaState s = initial_state(cfg, g);
  return {cfg, g, b, s};
}

double vmax(const Vec3& v) { return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])}); }

}  // namespace

TEST_SUITE("classical_stepper") {

TEST_CASE("stable dt at rest follows the ion sound speed") {
  Setup su = make(20, 0.0);
  for (auto& q : su.state.q) q = su.grid.cell_vec_field();
  PhysParams p = su.cfg.phys;
  p.eps = 4.0;  // electron speed sqrt(Te/(eps tau)) drops below the ion speed
  ClassicalStepConfig one;
  one.cfl = 1.0;
  CHECK(stable_dt(su.state, p, su.grid, one) ==
        doctest::Approx(su.grid.h() * std::sqrt(p.tau)).epsilon(1e-14));
}

TEST_CASE("stable dt shrinks by 10 when tau shrinks by 100") {
  const Setup su = make(20, 80.0);
  PhysParams p = su.cfg.phys;
  const double a = stable_dt(su.state, p, su.grid);
  p.tau /= 100;
  const double b = stable_dt(su.state, p, su.grid);
  CHECK(a / b == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("safety factor scales the step linearly") {
  const Setup su = make(20, 80.0);
  ClassicalStepConfig full, half;
  full.cfl = 1.0;
  half.cfl = 0.5;
  CHECK(stable_dt(su.state, su.cfg.phys, su.grid, half) ==
        doctest::Approx(0.5 * stable_dt(su.state, su.cfg.phys, su.grid, full)));
  ClassicalStepConfig bad;
  bad.cfl = 1.5;
  CHECK_THROWS_AS(stable_dt(su.state, su.cfg.phys, su.grid, bad), std::invalid_argument);
}

TEST_CASE("rotation with mu = 0 is the identity") {
  const Vec3 r{0.4, -1.2, 2.0};
  CHECK(solve_rotation(r, {0.3, 0.1, 2.0}, 0.0) == r);
}

TEST_CASE("rotation about e_z with mu = 1 solves v - v x B = r") {
  const Vec3 B{0, 0, 1}, r{1, 0, 0};
  const Vec3 v = solve_rotation(r, B, 1.0);
  CHECK(v[0] == doctest::Approx(0.5));
  CHECK(v[1] == doctest::Approx(-0.5));
  CHECK(v[2] == 0.0);
  CHECK(vmax(sub(sub(v, cross(v, B)), r)) <= 1e-14);
}

TEST_CASE("rotation residual and parallel component on random inputs") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  // |B| in [0.1, 10], mu in [1e-3, 10]: mu |B| up to 100 covers dt / tau of every run;
  // evaluating mu v x B alone costs eps mu |B| |r|, so larger products cannot meet 1e-13
  std::uniform_real_distribution<double> e(-1.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const Vec3 B = scale(std::pow(10.0, e(rng)), random_unit(rng));
    const Vec3 r{u(rng), u(rng), u(rng)};
    const double mu = std::pow(10.0, 2 * e(rng) - 1);
    const Vec3 v = solve_rotation(r, B, mu);
    const Vec3 res = sub(sub(v, scale(mu, cross(v, B))), r);
    CHECK(vmax(res) <= 1e-13 * vmax(r));
    const double bn = std::sqrt(dot(B, B));
    CHECK(std::abs(dot(v, B) - dot(r, B)) <= 1e-13 * vmax(r) * bn);
  }
}

TEST_CASE("central gradient is exact for affine fields away from the boundary") {
  const Grid g = build_grid(GridSpec::square2d(1, 2, 9, 7));
  CellField u(g.num_cells());
  for (std::size_t c = 0; c < u.size(); ++c) u[c] = 3 * g.cell_center(c)[0] - g.cell_center(c)[1];
  const CellVecField gr = central_gradient(u, g);
  for (int j = 1; j < 6; ++j)
    for (int i = 1; i < 8; ++i) {
      CHECK(gr[g.cell(i, j)][0] == doctest::Approx(3.0));
      CHECK(gr[g.cell(i, j)][1] == doctest::Approx(-1.0));
    }
  // zero-gradient ghosts halve the one-sided difference at the wall
  CHECK(gr[g.cell(0, 3)][0] == doctest::Approx(1.5));
}

TEST_CASE("stationary state is preserved to round-off") {
  const Setup su = make(20, 0.0);
  PhysParams p = su.cfg.phys;
  p.dt = stable_dt(su.state, p, su.grid);
  PlasmaState s = su.state;
  const FieldProvider fp = static_field(su.b);
  for (int k = 0; k < 100; ++k) {
    StepResult r = step_classical(s, fp, p, su.grid);
    INFO(r.diag.message);
    REQUIRE_FALSE(r.diag.diverged);
    s = std::move(r.state);
  }
  CHECK(max_abs_diff(s, su.state) <= 1e-12);
}

TEST_CASE("resolved perturbed steps stay bounded when the acoustic speed dominates") {
  // at C = 1 the electric wave speed sqrt((1 + 1/eps) n / (tau (Ci - Ce))) is below the
  // electron sound speed, so stable_dt resolves every explicit wave
  Setup su = make(20, 80.0);
  PhysParams p = su.cfg.phys;
  p.C = 1.0;
  p.dt = stable_dt(su.state, p, su.grid);
  PlasmaState s = su.state;
  for (int k = 0; k < 40; ++k) {
    StepResult r = step_classical(s, static_field(su.b), p, su.grid);
    INFO("step " << k << ": " << r.diag.message);
    REQUIRE_FALSE(r.diag.diverged);
    CHECK(r.diag.rotation_residual <= 1e-13);
    s = std::move(r.state);
  }
  CHECK_FALSE(detect_blowup(s, q_inf(su.state)));
}

TEST_CASE("at C = 1e-2 the electric wave outruns the acoustic step bound") {
  const Setup su = make(20, 80.0);
  const double q0 = q_inf(su.state);
  auto run = [&](double dt, double t_end) {
    PhysParams p = su.cfg.phys;
    p.dt = dt;
    PlasmaState s = su.state;
    while (s.t < t_end) {
      StepResult r = step_classical(s, static_field(su.b), p, su.grid);
      if (r.diag.diverged || detect_blowup(r.state, q0)) return true;
      s = std::move(r.state);
    }
    return false;
  };
  // the preset step stays bounded well past the 6e-6 horizon of the experiments
  CHECK_FALSE(run(su.cfg.phys.dt, 1e-5));
  CHECK(run(stable_dt(su.state, su.cfg.phys, su.grid), 1e-4));
}

TEST_CASE("fully coupled flux option also preserves the stationary state") {
  const Setup su = make(16, 0.0);
  ClassicalStepConfig cfg;
  cfg.fully_coupled = true;
  PhysParams p = su.cfg.phys;
  p.dt = stable_dt(su.state, p, su.grid, cfg);
  const StepResult r = step_classical(su.state, static_field(su.b), p, su.grid, cfg);
  INFO(r.diag.message);
  CHECK_FALSE(r.diag.diverged);
  CHECK(max_abs_diff(r.state, su.state) <= 1e-12);
}

TEST_CASE("ten times the stable step blows up within 50 steps") {
  const Setup su = make(16, 80.0);
  PhysParams p = su.cfg.phys;
  p.dt = 10 * stable_dt(su.state, p, su.grid);
  const double q0 = q_inf(su.state);
  PlasmaState s = su.state;
  int blown = 0;
  for (int k = 1; k <= 50 && !blown; ++k) {
    StepResult r = step_classical(s, static_field(su.b), p, su.grid);
    if (r.diag.diverged || detect_blowup(r.state, q0)) blown = k;
    s = std::move(r.state);
  }
  CHECK(blown > 0);
}

TEST_CASE("blow-up detector") {
  const Setup su = make(8, 0.0);
  const double q0 = q_inf(su.state);
  CHECK(q0 == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK_FALSE(detect_blowup(su.state, q0));
  PlasmaState s = su.state;
  s.q[kIon][3][1] = std::numeric_limits<double>::quiet_NaN();
  CHECK(detect_blowup(s, q0));
  s = su.state;
  s.q[kElectron][5][0] = 2e6;
  CHECK(detect_blowup(s, q0));
}

}
