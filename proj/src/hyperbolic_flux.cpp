#include "driftlimit/hyperbolic_flux.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace driftlimit {

namespace {

double mass_weight(const Vec3& b, int axis, int j, bool perp) {
  const double delta = axis == j ? 1.0 : 0.0;
  return perp ? delta - b[axis] * b[j] : delta;
}

}  // namespace

Flux4 explicit_flux_vector(double n, const Vec3& q, const Vec3& b, int axis,
                           const FluxModel& m) {
  Flux4 f{};
  for (int j = 0; j < 3; ++j) f[0] += mass_weight(b, axis, j, m.perp_mass) * q[j];
  const double qa = q[axis];
  for (int i = 0; i < 3; ++i) f[1 + i] = qa * q[i] / n;
  f[1 + axis] += m.pressure * n;
  return f;
}

double jacobian_spectral_radius(double n, const Vec3& q, const Vec3& b, int axis,
                                const FluxModel& m) {
  const Vec3 u = scale(1.0 / n, q);
  if (m.cheap_bound)
    return std::abs(u[axis]) + std::sqrt(dot(u, u)) + 1.0 + std::sqrt(std::max(m.pressure, 0.0)) +
           m.extra_speed;
  Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
  for (int j = 0; j < 3; ++j) J(0, 1 + j) = mass_weight(b, axis, j, m.perp_mass);
  for (int i = 0; i < 3; ++i) {
    J(1 + i, 0) = -u[axis] * u[i] + (i == axis ? m.pressure : 0.0);
    for (int j = 0; j < 3; ++j)
      J(1 + i, 1 + j) = (axis == j ? u[i] : 0.0) + (i == j ? u[axis] : 0.0);
  }
  Eigen::EigenSolver<Eigen::Matrix4d> es(J, false);
  double r = 0.0;
  for (int k = 0; k < 4; ++k) r = std::max(r, std::abs(es.eigenvalues()[k]));
  return r + m.extra_speed;
}

Flux4 rusanov_interface_flux(double nL, const Vec3& qL, const Vec3& bL, double nR,
                             const Vec3& qR, const Vec3& bR, int axis, const FluxModel& m) {
  const Flux4 fL = explicit_flux_vector(nL, qL, bL, axis, m);
  const Flux4 fR = explicit_flux_vector(nR, qR, bR, axis, m);
  const double s = std::max(jacobian_spectral_radius(nL, qL, bL, axis, m),
                            jacobian_spectral_radius(nR, qR, bR, axis, m));
  const Flux4 dW{nR - nL, qR[0] - qL[0], qR[1] - qL[1], qR[2] - qL[2]};
  Flux4 F{};
  for (int k = 0; k < 4; ++k) F[k] = 0.5 * (fL[k] + fR[k]) - 0.5 * s * dW[k];
  return F;
}

FVDivergence fv_divergence(const CellField& n, const CellVecField& q, const CellVecField& b,
                           const Grid& g, const FluxModel& m) {
  check_size(n, g, "fv_divergence");
  if (q.size() != g.num_cells() || b.size() != g.num_cells())
    throw std::invalid_argument("fv_divergence: field size mismatch");
  FVDivergence out;
  out.mass.assign(g.num_cells(), 0.0);
  out.momentum.assign(g.num_cells(), Vec3{0, 0, 0});
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    if (!(n[c] > 0.0) || !std::isfinite(n[c]) || !std::isfinite(q[c][0]) ||
        !std::isfinite(q[c][1]) || !std::isfinite(q[c][2]))
      out.positive = false;
  if (!out.positive) return out;

  std::vector<Flux4> f(g.num_cells());
  std::vector<double> rad(g.num_cells());
  for (int a = 0; a < g.dim(); ++a) {
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      f[c] = explicit_flux_vector(n[c], q[c], b[c], a, m);
      rad[c] = jacobian_spectral_radius(n[c], q[c], b[c], a, m);
    }
    const double inv = 1.0 / g.d(a);
    // interface between cell L and R = L + e_a; ghosts copy the boundary cell
    auto face = [&](std::size_t L, std::size_t R) {
      const double s = std::max(rad[L], rad[R]);
      Flux4 F;
      F[0] = 0.5 * (f[L][0] + f[R][0]) - 0.5 * s * (n[R] - n[L]);
      for (int k = 0; k < 3; ++k)
        F[1 + k] = 0.5 * (f[L][1 + k] + f[R][1 + k]) - 0.5 * s * (q[R][k] - q[L][k]);
      return F;
    };
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      auto ijk = g.cell_ijk(c);
      std::array<int, 3> lo = ijk, hi = ijk;
      lo[a] = std::max(ijk[a] - 1, 0);
      hi[a] = std::min(ijk[a] + 1, g.nc(a) - 1);
      const std::size_t cl = g.cell(lo[0], lo[1], lo[2]);
      const std::size_t ch = g.cell(hi[0], hi[1], hi[2]);
      const Flux4 Fp = face(c, ch);
      const Flux4 Fm = face(cl, c);
      out.mass[c] += (Fp[0] - Fm[0]) * inv;
      for (int k = 0; k < 3; ++k) out.momentum[c][k] += (Fp[1 + k] - Fm[1 + k]) * inv;
    }
  }
  return out;
}

}  // namespace driftlimit
