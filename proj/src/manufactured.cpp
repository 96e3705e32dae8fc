#include "driftlimit/manufactured.hpp"

#include <cmath>

namespace driftlimit::manufactured {

namespace {

constexpr double kStep = 1e-5;

template <class F>
double d4(F&& f, double s) {
  return (-f(s + 2 * kStep) + 8 * f(s + kStep) - 8 * f(s - kStep) + f(s - 2 * kStep)) /
         (12 * kStep);
}

// One Cartesian component of H b (b . grad p1).
double flux(double x, double y, int axis) {
  const double gx = d4([y](double s) { return p1(s, y); }, x);
  const double gy = d4([x](double s) { return p1(x, s); }, y);
  const Vec3 bb = b(x, y);
  return H(x, y) * bb[axis] * (bb[0] * gx + bb[1] * gy);
}

}  // namespace

double p1(double x, double y) {
  const double s = (x - 1.0) * (2.0 - x) * (y - 1.0) * (2.0 - y);
  return s * s * s;
}

double H(double x, double y) {
  const double s = std::sin(x) * std::sin(y);
  return 1.0 + s * s;
}

Vec3 b(double x, double y) {
  const double t = std::atan(y / x);
  return {std::sin(t), -std::cos(t), 0.0};
}

double div_flux(double x, double y) {
  const double dx = d4([y](double s) { return flux(s, y, 0); }, x);
  const double dy = d4([x](double s) { return flux(x, s, 1); }, y);
  return dx + dy;
}

double rhs(double x, double y, double tau) {
  return kLambda * (kP0 + tau * p1(x, y)) - div_flux(x, y);
}

}  // namespace driftlimit::manufactured
