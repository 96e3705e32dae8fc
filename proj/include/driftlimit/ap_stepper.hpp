#pragma once

#include <array>

#include "driftlimit/ap_diffusion.hpp"
#include "driftlimit/hyperbolic_flux.hpp"
#include "driftlimit/plasma.hpp"

namespace driftlimit {

struct APStepOptions {
  SolverOptions solver;
  FluxModel flux;  // perp_mass must stay true for this scheme
  // Solve for the increments n' - n and phi' - phi rather than the levels.
  // Same equations; avoids losing the O(tau) perturbation against n ~ 1.
  bool increment_form = true;
};

// Explicit divergences of the level-m state for both species, with the mass
// flux restricted to its perpendicular part.
struct ExplicitTerms {
  std::array<FVDivergence, 2> fv;
};

ExplicitTerms explicit_terms(const PlasmaState& s, const MagneticField& b, const Grid& g,
                             const FluxModel& m = {});

// R = lambda1 n^m + R_flux.  The two-argument overloads recompute the
// explicit terms.
CellField assemble_R(const PlasmaState& s, const MagneticField& b, const PhysParams& p,
                     const Grid& g);
CellField assemble_R(const PlasmaState& s, const ExplicitTerms& ex, const MagneticField& b,
                     const PhysParams& p, const Grid& g);
CellField assemble_R_flux(const PlasmaState& s, const ExplicitTerms& ex, const MagneticField& b,
                          const PhysParams& p, const Grid& g);

// S = lambda2 phi^m + S_flux(n_new - n^m).
CellField assemble_S(const PlasmaState& s, const CellField& n_new, const MagneticField& b,
                     const PhysParams& p, const Grid& g);
CellField assemble_S(const PlasmaState& s, const CellField& n_new, const ExplicitTerms& ex,
                     const MagneticField& b, const PhysParams& p, const Grid& g);
CellField assemble_S_flux(const PlasmaState& s, const CellField& dn, const ExplicitTerms& ex,
                          const MagneticField& b, const PhysParams& p, const Grid& g);

// Node force T dh_grad* n + q n_* grad* phi; zero on boundary nodes.
NodeVecField node_force(const CellField& n, const CellField& phi, int species,
                        const PhysParams& p, const Grid& g);

// Closed-form solve of (I - gamma b x) v = r on the plane normal to b.
Vec3 solve_perp_rotation(const Vec3& r_perp, const Vec3& b, double gamma);

// Exact increments of a step.  Stored-state differences cancel about five
// digits when n ~ 1 and the increment is ~1e-11.
struct StepIncrements {
  CellField dn;
  CellField dphi;
};

StepResult step_ap(const PlasmaState& s, const FieldProvider& field, const PhysParams& p,
                   const Grid& g, const APStepOptions& opt = {},
                   StepIncrements* increments = nullptr);

StepDiagnostics step_residuals(const PlasmaState& s, const PlasmaState& s_new,
                               const MagneticField& b, const PhysParams& p, const Grid& g,
                               const StepIncrements* increments = nullptr);

// Discrete L2 norm of a node field weighted by the cell volume.
double node_l2(const NodeField& w, const Grid& g);

}  // namespace driftlimit
