#ifndef PNL_NUMERICS_HPP_
#define PNL_NUMERICS_HPP_

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "pnl/errors.hpp"

namespace pnl {

template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = Vector<double>;
using Mat = Matrix<double>;
using Index = Eigen::Index;

template <typename DerivedA, typename DerivedB>
void require_same_size(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                       const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

/// Unit-L2 copy of `v`. A vector that is already unit within rounding is
/// returned unchanged, which makes normalization bitwise idempotent.
template <typename Derived>
Vector<typename Derived::Scalar> l2_normalize(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar sq = v.squaredNorm();
  if (!(sq > Scalar(0)) || !std::isfinite(sq)) {
    throw DegenerateInput("l2_normalize: zero or non-finite vector");
  }
  if (std::abs(sq - Scalar(1)) <= Scalar(4) * std::numeric_limits<Scalar>::epsilon()) {
    return v;
  }
  return v / std::sqrt(sq);
}

/// log(sum(exp(x))) with max subtraction.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar hi = x.maxCoeff();
  return hi + std::log((x.array() - hi).exp().sum());
}

/// Softmax of logits / tau, stabilized by subtracting the maximum.
template <typename Derived>
Vector<typename Derived::Scalar> softmax_temp(const Eigen::MatrixBase<Derived>& logits,
                                              typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!(tau > Scalar(0))) throw InvalidHyperparameter("softmax_temp: temperature must be > 0");
  if (logits.size() == 0) throw DegenerateInput("softmax_temp: empty logits");
  if (!logits.allFinite()) throw DegenerateInput("softmax_temp: non-finite logit");
  const Scalar hi = logits.maxCoeff();
  Vector<Scalar> e = ((logits.array() - hi) / tau).exp().matrix();
  return e / e.sum();
}

/// Index of the largest coefficient; ties resolve to the lowest index.
template <typename Derived>
Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

/// Central-difference gradient of `f` at `theta`. Used as the reference
/// oracle for every analytic gradient in the tests.
template <typename Scalar>
Vector<Scalar> finite_diff_grad(const std::function<Scalar(const Vector<Scalar>&)>& f,
                                const Vector<Scalar>& theta, Scalar eps) {
  if (!(eps > Scalar(0))) throw InvalidHyperparameter("finite_diff_grad: step must be > 0");
  Vector<Scalar> grad(theta.size());
  Vector<Scalar> probe = theta;
  for (Index j = 0; j < theta.size(); ++j) {
    probe(j) = theta(j) + eps;
    const Scalar up = f(probe);
    probe(j) = theta(j) - eps;
    const Scalar down = f(probe);
    probe(j) = theta(j);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw OracleFailure("finite_diff_grad: objective not finite at coordinate " +
                          std::to_string(j));
    }
    grad(j) = (up - down) / (Scalar(2) * eps);
  }
  return grad;
}

}  // namespace pnl

#endif  // PNL_NUMERICS_HPP_
