#include "driftlimit/plasma.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace driftlimit {

void PhysParams::validate(bool require_positive_tau) const {
  auto bad = [](const char* msg) { throw std::invalid_argument(msg); };
  if (!std::isfinite(tau) || tau < 0.0) bad("tau must be >= 0");
  if (require_positive_tau && !(tau > 0.0)) bad("tau must be > 0 for a two-fluid step");
  if (!(eps > 0.0) || !std::isfinite(eps)) bad("eps must be > 0");
  if (Te == 1.0)
    bad("Te = 1 is not allowed: lambda2 = Te C / (dt^2 (Te - 1)) is singular at Te = 1");
  if (!(Te > 1.0) || !std::isfinite(Te)) bad("Te must be > 1");
  if (!(C > 0.0) || !std::isfinite(C)) bad("C must be > 0 (the potential problem loses uniqueness at C = 0)");
  if (!(dt > 0.0) || !std::isfinite(dt)) bad("dt must be > 0");
}

bool all_finite(const PlasmaState& s) {
  for (double v : s.n)
    if (!std::isfinite(v)) return false;
  for (double v : s.phi)
    if (!std::isfinite(v)) return false;
  for (const auto& q : s.q)
    for (const Vec3& v : q)
      if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2])) return false;
  return true;
}

double max_abs_diff(const PlasmaState& a, const PlasmaState& b) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.n.size(); ++c) {
    m = std::max(m, std::abs(a.n[c] - b.n[c]));
    m = std::max(m, std::abs(a.phi[c] - b.phi[c]));
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < 3; ++k) m = std::max(m, std::abs(a.q[s][c][k] - b.q[s][c][k]));
  }
  return m;
}

bool StepDiagnostics::consistent(double rel_tol) const {
  for (int a = 0; a < 2; ++a) {
    if (!(continuity_rel[a] <= rel_tol || continuity_noise[a] <= 1.0)) return false;
    if (!(momentum_rel[a] <= rel_tol || momentum_noise[a] <= 1.0)) return false;
  }
  return true;
}

FieldProvider static_field(std::shared_ptr<const MagneticField> f) {
  return [f](double) { return f; };
}

}  // namespace driftlimit
