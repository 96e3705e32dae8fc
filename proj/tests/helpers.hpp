#pragma once
#include <cmath>
#include <random>
#include <vector>

#include "driftlimit/grid.hpp"

namespace testing_util {

using driftlimit::Vec3;

// Fixed seeds keep every property test reproducible.
inline std::vector<double> random_vector(std::size_t n, unsigned seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec3 v{nd(rng), nd(rng), nd(rng)};
  const double m = std::sqrt(driftlimit::dot(v, v));
  return driftlimit::scale(1.0 / m, v);
}

inline double norm(const Vec3& v) { return std::sqrt(driftlimit::dot(v, v)); }

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace testing_util
