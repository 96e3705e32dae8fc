#pragma once

#include "driftlimit/hyperbolic_flux.hpp"
#include "driftlimit/plasma.hpp"

namespace driftlimit {

struct ClassicalStepConfig {
  double cfl = 0.5;  // safety factor in (0, 1]
  // Put the isothermal pressure inside the Rusanov flux instead of treating
  // it as a central-difference source.
  bool fully_coupled = false;

  void validate() const;
};

// cfl * h / max over cells and species of (|u| + sqrt(T / (eps_a tau))).
double stable_dt(const PlasmaState& s, const PhysParams& p, const Grid& g,
                 const ClassicalStepConfig& cfg = {});

// Unique solution of v - mu v x B = r.
Vec3 solve_rotation(const Vec3& r, const Vec3& B, double mu);

// Central differences at cell centres with zero-gradient ghost cells.
CellVecField central_gradient(const CellField& u, const Grid& g);

StepResult step_classical(const PlasmaState& s, const FieldProvider& field, const PhysParams& p,
                          const Grid& g, const ClassicalStepConfig& cfg = {});

// True when a field is not finite or |q|_inf exceeds 1e6 times q0_inf.
bool detect_blowup(const PlasmaState& s, double q0_inf);
double q_inf(const PlasmaState& s);

}  // namespace driftlimit
