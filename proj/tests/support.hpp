#ifndef PNL_TESTS_SUPPORT_HPP_
#define PNL_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <random>

#include "pnl/numerics.hpp"

namespace testing {

using pnl::Index;
using pnl::Mat;
using pnl::Vec;

inline Vec gaussian_vec(Index n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Vec v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

inline Mat gaussian_mat(Index r, Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Mat m(r, c);
  for (auto& x : m.reshaped()) x = g(rng);
  return m;
}

inline Vec unit_vec(Index n, std::mt19937_64& rng) { return pnl::l2_normalize(gaussian_vec(n, rng)); }

inline Mat unit_cols(Index d, Index n, std::mt19937_64& rng) {
  Mat m(d, n);
  for (Index j = 0; j < n; ++j) m.col(j) = unit_vec(d, rng);
  return m;
}

/// Worst per-coordinate relative error, with a floor on the denominator so
/// that coordinates that are zero up to rounding compare absolutely.
inline double max_rel_err(const Vec& a, const Vec& b, double floor = 1e-3) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double den = std::max({floor, std::abs(a(i)), std::abs(b(i))});
    worst = std::max(worst, std::abs(a(i) - b(i)) / den);
  }
  return worst;
}

inline int uniform_int(int lo, int hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace testing

#endif  // PNL_TESTS_SUPPORT_HPP_
