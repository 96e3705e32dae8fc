#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>

#include "driftlimit/grid.hpp"
#include "driftlimit/stencil.hpp"

namespace driftlimit {

enum Species { kIon = 0, kElectron = 1 };

// Which denominator multiplies the potential equation.  Consistent uses
// T_e + 1, the factor produced by eliminating the density gradient from the
// two discrete continuity equations; Literal keeps T_e - 1 as printed in the
// source derivation.  Both give the same C / dt^2 potential source.
enum class PotentialForm { Consistent, Literal };

struct PhysParams {
  double tau = 1e-8;
  double eps = 1.0;
  double Te = 3.0;
  double C = 1e-2;
  double dt = 5e-9;
  PotentialForm form = PotentialForm::Consistent;

  // C_i + eps C_e = 0 and C_i - (eps/T_e) C_e = C.
  double Ci() const { return Te * C / (1.0 + Te); }
  double Ce() const { return -Te * C / (eps * (1.0 + Te)); }
  double C_alpha(int s) const { return s == kIon ? Ci() : Ce(); }
  double lambda1() const { return (1.0 + eps) / (dt * dt * (1.0 + Te)); }
  double potential_factor() const {
    return form == PotentialForm::Consistent ? Te / (Te + 1.0) : Te / (Te - 1.0);
  }
  double lambda2() const { return potential_factor() * C / (dt * dt); }
  double eps_alpha(int s) const { return s == kIon ? 1.0 : eps; }
  double charge(int s) const { return s == kIon ? 1.0 : -1.0; }
  double T(int s) const { return s == kIon ? 1.0 : Te; }

  // Throws std::invalid_argument naming the offending parameter.
  void validate(bool require_positive_tau = true) const;
};

struct PlasmaState {
  CellField n;
  std::array<CellVecField, 2> q;
  CellField phi;
  double t = 0.0;
};

bool all_finite(const PlasmaState& s);
double max_abs_diff(const PlasmaState& a, const PlasmaState& b);

// Magnetic field at a given time.  Static fields return the same instance,
// so assembled operators stay cached across steps.
using FieldProvider = std::function<std::shared_ptr<const MagneticField>(double t)>;

FieldProvider static_field(std::shared_ptr<const MagneticField> f);

struct StepDiagnostics {
  std::array<double, 2> continuity{0, 0};        // L2 residual per species
  std::array<double, 2> continuity_rel{0, 0};    // relative to largest term
  std::array<double, 2> momentum{0, 0};
  std::array<double, 2> momentum_rel{0, 0};
  // residual in units of eps times the operand size of the cancelling terms
  std::array<double, 2> continuity_noise{0, 0};
  std::array<double, 2> momentum_noise{0, 0};
  std::array<double, 2> ap_node{0, 0};           // |T dh n + q n_* dh phi|_2
  std::array<double, 2> qperp_dot_b{0, 0};       // max |q_perp . b|
  std::array<int, 4> iterations{0, 0, 0, 0};     // n: macro, micro; phi: macro, micro
  double rotation_residual = 0.0;                // closed-form solve check
  bool diverged = false;
  std::string message;

  // Residuals are consistent when they are 1e-6 relative to the largest term
  // or within the round-off floor.
  bool consistent(double rel_tol = 1e-6) const;
};

struct StepResult {
  PlasmaState state;
  StepDiagnostics diag;
};

}  // namespace driftlimit
