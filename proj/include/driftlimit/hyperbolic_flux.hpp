#pragma once

#include <array>

#include "driftlimit/grid.hpp"

namespace driftlimit {

using Flux4 = std::array<double, 4>;  // (mass, momentum x, y, z)

// Flux model.  The AP scheme transports only the perpendicular mass flux
// explicitly; the explicit reference scheme uses the full mass flux and may
// fold the isothermal pressure into the flux.
struct FluxModel {
  bool perp_mass = true;
  double pressure = 0.0;     // coefficient P of the P n e_a momentum flux term
  double extra_speed = 0.0;  // added to the Jacobian spectral radius
  bool cheap_bound = false;  // |u_a| + |u| + 1 instead of the eigensolve
};

Flux4 explicit_flux_vector(double n, const Vec3& q, const Vec3& b, int axis,
                           const FluxModel& m = {});

double jacobian_spectral_radius(double n, const Vec3& q, const Vec3& b, int axis,
                                const FluxModel& m = {});

// 1/2 (f_L + f_R) - 1/2 s (W_R - W_L), s = max(radius_L, radius_R).
Flux4 rusanov_interface_flux(double nL, const Vec3& qL, const Vec3& bL, double nR,
                             const Vec3& qR, const Vec3& bR, int axis,
                             const FluxModel& m = {});

struct FVDivergence {
  CellField mass;
  CellVecField momentum;
  bool positive = true;  // false when some n <= 0 or a value is not finite
};

// Sum over active axes of (F_{K+1/2} - F_{K-1/2}) / da with zero-gradient
// ghost cells.  b is sampled at cell centres.
FVDivergence fv_divergence(const CellField& n, const CellVecField& q, const CellVecField& b,
                           const Grid& g, const FluxModel& m = {});

}  // namespace driftlimit
