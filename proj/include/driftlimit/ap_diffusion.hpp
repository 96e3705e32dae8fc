#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "driftlimit/grid.hpp"
#include "driftlimit/stencil.hpp"

namespace driftlimit {

// A linear solve did not converge or produced an inconsistent result.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// -dh_star(H dh p) + tau lambda p = tau f, dh p = 0 on boundary nodes.
struct AnisoDiffusionProblem {
  const MagneticField* b = nullptr;
  NodeField H;  // at nodes, > 0
  double lambda = 1.0;
  double tau = 0.0;
  CellField f;
};

enum class MicroForm {
  Single,      // -H dh dh_star l + tau lambda l = -tau lambda h
  TwoProblem,  // L then l; exact only for constant H
};

struct SolverOptions {
  double rel_tol = 1e-12;
  int max_iter = 20000;
  MicroForm micro = MicroForm::Single;
  bool check_kernel = true;
};

struct LinearSolveInfo {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

struct MicroMacroSolution {
  CellField p;
  CellField pi;
  CellField q;
  NodeField h;
  NodeField l;
  LinearSolveInfo h_solve;
  LinearSolveInfo l_solve;
  double kernel_defect = 0.0;  // max |dh pi|
  std::string warning;         // set when tau lambda dominates the operator scale
};

// Jacobi-preconditioned conjugate gradient on (M + diag(shift)) x = rhs.
// Works on consistent singular systems; iteration order is fixed.
LinearSolveInfo conjugate_gradient(const SpMat& M, const std::vector<double>& shift,
                                   const std::vector<double>& rhs, std::vector<double>& x,
                                   double rel_tol, int max_iter);

MicroMacroSolution solve_micro_macro(const AnisoDiffusionProblem& prob, const Grid& g,
                                     const SolverOptions& opt = {});

// Sparse LDLT of A_H + tau lambda I, checked by its normwise backward error.
CellField solve_direct(const AnisoDiffusionProblem& prob, const Grid& g,
                       double* backward_error = nullptr);

// A_H p + tau lambda p - tau f, evaluated matrix-free.
CellField diffusion_residual(const AnisoDiffusionProblem& prob, const CellField& p,
                             const Grid& g);

double ap_limit_residual(const MicroMacroSolution& sol, const MagneticField& b,
                         const Grid& g);

void validate(const AnisoDiffusionProblem& prob, const Grid& g);

}  // namespace driftlimit
