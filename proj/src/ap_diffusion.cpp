#include "driftlimit/ap_diffusion.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace driftlimit {

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm_inf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void spmv(const SpMat& M, const std::vector<double>& shift, const std::vector<double>& x,
          std::vector<double>& y) {
  Eigen::Map<const Eigen::VectorXd> xm(x.data(), static_cast<int>(x.size()));
  Eigen::Map<Eigen::VectorXd> ym(y.data(), static_cast<int>(y.size()));
  ym.noalias() = M * xm;
  if (!shift.empty())
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += shift[i] * x[i];
}

[[noreturn]] void fail_solve(const char* what, const LinearSolveInfo& info) {
  std::ostringstream os;
  os << what << ": conjugate gradient did not converge (iterations " << info.iterations
     << ", relative residual " << info.rel_residual << ")";
  throw SolverError(os.str());
}

}  // namespace

LinearSolveInfo conjugate_gradient(const SpMat& M, const std::vector<double>& shift,
                                   const std::vector<double>& rhs, std::vector<double>& x,
                                   double rel_tol, int max_iter) {
  const std::size_t n = rhs.size();
  if (static_cast<std::size_t>(M.rows()) != n || (!shift.empty() && shift.size() != n))
    throw std::invalid_argument("conjugate_gradient: size mismatch");
  x.resize(n, 0.0);
  LinearSolveInfo info;
  const double bnorm = norm2(rhs);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    info.converged = true;
    return info;
  }
  std::vector<double> dinv(n, 1.0);
  for (int r = 0; r < M.outerSize(); ++r) {
    double d = shift.empty() ? 0.0 : shift[r];
    for (SpMat::InnerIterator it(M, r); it; ++it)
      if (it.col() == r) d += it.value();
    if (d > 0.0) dinv[r] = 1.0 / d;
  }
  std::vector<double> r(n), z(n), p(n), Ap(n);
  spmv(M, shift, x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - Ap[i];
  for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
  double rn = norm2(r);
  const double target = rel_tol * bnorm;
  int it = 0;
  while (rn > target && it < max_iter) {
    spmv(M, shift, p, Ap);
    double pAp = 0.0;
    for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
    if (!(pAp > 0.0)) break;
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    ++it;
    // periodic true-residual refresh limits drift on singular systems
    if (it % 200 == 0) {
      spmv(M, shift, x, Ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - Ap[i];
    }
    rn = norm2(r);
    for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  spmv(M, shift, x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - Ap[i];
  info.iterations = it;
  info.rel_residual = norm2(r) / bnorm;
  info.converged = info.rel_residual <= rel_tol * 10.0 || rn <= target;
  return info;
}

void validate(const AnisoDiffusionProblem& prob, const Grid& g) {
  if (!prob.b) throw std::invalid_argument("diffusion problem: missing magnetic field");
  if (!(prob.lambda > 0.0) || !std::isfinite(prob.lambda))
    throw std::invalid_argument("diffusion problem: lambda must be positive");
  if (!(prob.tau >= 0.0) || !std::isfinite(prob.tau))
    throw std::invalid_argument("diffusion problem: tau must be non-negative");
  check_node_size(prob.H, g, "diffusion problem H");
  check_size(prob.f, g, "diffusion problem f");
  for (double v : prob.H)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("diffusion problem: H must be positive");
}

MicroMacroSolution solve_micro_macro(const AnisoDiffusionProblem& prob, const Grid& g,
                                     const SolverOptions& opt) {
  validate(prob, g);
  const MagneticField& b = *prob.b;
  const OperatorBundle& ops = b.operators(g);
  const auto& interior = g.interior_nodes();
  const std::size_t ni = interior.size();
  const double lam = prob.lambda;
  const double tau = prob.tau;

  MicroMacroSolution sol;

  // macro part: pi = f/lambda + dh_star h lies in ker dh
  const NodeField dhf = apply_dh(prob.f, b, g);
  std::vector<double> rhs(ni);
  for (std::size_t r = 0; r < ni; ++r) rhs[r] = dhf[interior[r]] / lam;
  std::vector<double> hv(ni, 0.0);
  sol.h_solve = conjugate_gradient(ops.n1, {}, rhs, hv, opt.rel_tol, opt.max_iter);
  if (!sol.h_solve.converged) fail_solve("macro problem", sol.h_solve);
  sol.h = extend_interior(hv, g);
  const CellField dh_star_h = apply_dhstar(sol.h, b, g);
  sol.pi.resize(g.num_cells());
  for (std::size_t c = 0; c < g.num_cells(); ++c) sol.pi[c] = prob.f[c] / lam + dh_star_h[c];

  const NodeField dpi = apply_dh(sol.pi, b, g);
  sol.kernel_defect = norm_inf(dpi);
  if (opt.check_kernel) {
    const double ktol = 1e-8 * norm_inf(sol.pi) + 1e-12;
    if (sol.kernel_defect > ktol) {
      std::ostringstream os;
      os << "macro part left the kernel of dh: |dh pi|_inf = " << sol.kernel_defect
         << " > " << ktol;
      throw SolverError(os.str());
    }
  }

  // micro part: q = dh_star l
  std::vector<double> lv(ni, 0.0);
  if (tau > 0.0) {
    std::vector<double> shift(ni);
    double maxdiag = 0.0, maxH = 0.0;
    for (std::size_t r = 0; r < ni; ++r) {
      const double H = prob.H[interior[r]];
      shift[r] = tau * lam / H;
      maxdiag = std::max(maxdiag, ops.n1_diag[r]);
      maxH = std::max(maxH, H);
    }
    if (tau * lam > 2.0 * maxdiag * maxH) {
      std::ostringstream os;
      os << "tau*lambda = " << tau * lam << " exceeds the operator scale "
         << 2.0 * maxdiag * maxH << "; a direct solve would do as well";
      sol.warning = os.str();
    }
    std::vector<double> mrhs(ni);
    if (opt.micro == MicroForm::Single) {
      for (std::size_t r = 0; r < ni; ++r)
        mrhs[r] = -tau * lam * hv[r] / prob.H[interior[r]];
      sol.l_solve = conjugate_gradient(ops.n1, shift, mrhs, lv, opt.rel_tol, opt.max_iter);
      if (!sol.l_solve.converged) fail_solve("micro problem", sol.l_solve);
    } else {
      for (std::size_t r = 0; r < ni; ++r)
        mrhs[r] = -tau * dhf[interior[r]] / prob.H[interior[r]];
      std::vector<double> L(ni, 0.0);
      auto first = conjugate_gradient(ops.n1, shift, mrhs, L, opt.rel_tol, opt.max_iter);
      if (!first.converged) fail_solve("micro problem (L)", first);
      sol.l_solve = conjugate_gradient(ops.n1, {}, L, lv, opt.rel_tol, opt.max_iter);
      sol.l_solve.iterations += first.iterations;
      if (!sol.l_solve.converged) fail_solve("micro problem (l)", sol.l_solve);
    }
  }
  sol.l = extend_interior(lv, g);
  sol.q = apply_dhstar(sol.l, b, g);
  sol.p.resize(g.num_cells());
  for (std::size_t c = 0; c < g.num_cells(); ++c) sol.p[c] = sol.pi[c] + sol.q[c];
  return sol;
}

CellField diffusion_residual(const AnisoDiffusionProblem& prob, const CellField& p,
                             const Grid& g) {
  validate(prob, g);
  NodeField flux = apply_dh(p, *prob.b, g);
  for (std::size_t n = 0; n < flux.size(); ++n) flux[n] *= prob.H[n];
  const CellField div = apply_dhstar(flux, *prob.b, g);
  CellField r(g.num_cells());
  for (std::size_t c = 0; c < r.size(); ++c)
    r[c] = -div[c] + prob.tau * prob.lambda * p[c] - prob.tau * prob.f[c];
  return r;
}

CellField solve_direct(const AnisoDiffusionProblem& prob, const Grid& g,
                       double* backward_error) {
  validate(prob, g);
  if (!(prob.tau > 0.0))
    throw std::invalid_argument("solve_direct: tau must be > 0 (the system is singular at tau = 0)");
  const FieldOperator A = assemble_operator(OperatorKind::A, *prob.b, prob.H, g);
  SpMat M = A.m;
  const int n = static_cast<int>(M.rows());
  SpMat I(n, n);
  I.setIdentity();
  M += (prob.tau * prob.lambda) * I;
  Eigen::SparseMatrix<double> Mc = M;  // column major for the factorization
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Mc);
  if (ldlt.info() != Eigen::Success) throw SolverError("solve_direct: factorization failed");
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = prob.tau * prob.f[i];
  if (rhs.norm() == 0.0) {
    if (backward_error) *backward_error = 0.0;
    return CellField(static_cast<std::size_t>(n), 0.0);
  }
  // normwise backward error, the quantity a stable direct solve keeps near eps
  double m_inf = 0.0;
  for (int r = 0; r < n; ++r) m_inf = std::max(m_inf, M.row(r).cwiseAbs().sum());
  const auto backward = [&](const Eigen::VectorXd& x) {
    return (Mc * x - rhs).lpNorm<Eigen::Infinity>() /
           (m_inf * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>());
  };
  Eigen::VectorXd x = ldlt.solve(rhs);
  double rel = backward(x);
  for (int refine = 0; refine < 5 && rel > 1e-15; ++refine) {
    x += ldlt.solve(rhs - Mc * x);
    rel = backward(x);
  }
  if (!(rel <= 1e-12)) {
    std::ostringstream os;
    os << "solve_direct: backward error " << rel << " above 1e-12";
    throw SolverError(os.str());
  }
  if (backward_error) *backward_error = rel;
  return CellField(x.data(), x.data() + n);
}

double ap_limit_residual(const MicroMacroSolution& sol, const MagneticField& b,
                         const Grid& g) {
  return norm2(apply_dh(sol.p, b, g));
}

}  // namespace driftlimit
