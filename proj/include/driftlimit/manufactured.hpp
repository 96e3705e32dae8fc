#pragma once

#include "driftlimit/grid.hpp"

namespace driftlimit::manufactured {

// Anisotropic diffusion test on [1,2]^2 with exact solution p0 + tau p1.
inline constexpr double kP0 = 2.0;
inline constexpr double kLambda = 1.0;

double p1(double x, double y);
double H(double x, double y);
Vec3 b(double x, double y);  // (sin t, -cos t, 0), t = atan(y/x)

// div(H b b.grad p1), by nested fourth-order central differences of the
// closed-form functions with step 1e-5.
double div_flux(double x, double y);

// lambda (p0 + tau p1) - div(H b b.grad p1)
double rhs(double x, double y, double tau);

}  // namespace driftlimit::manufactured
