#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace mfadv {

using Index = Eigen::Index;

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Samples2 = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

/// True when `length` is a non-negative integer multiple of `step` (relative tolerance 1e-9).
template <typename Scalar>
bool is_grid_multiple(Scalar length, Scalar step) {
  using std::abs;
  using std::round;
  if (!(step > Scalar(0)) || length < Scalar(0)) return false;
  const Scalar ratio = length / step;
  const Scalar nearest = round(ratio);
  return abs(ratio - nearest) <= Scalar(1e-9) * (Scalar(1) + nearest);
}

/// Number of grid steps covering `length`; throws std::invalid_argument off-grid.
template <typename Scalar>
Index grid_steps(Scalar length, Scalar step, const char* what = "time") {
  using std::round;
  if (!is_grid_multiple(length, step)) {
    throw std::invalid_argument(std::string(what) + " is not a non-negative multiple of the grid step");
  }
  return static_cast<Index>(round(length / step));
}

/// Composite trapezoid of uniformly spaced samples. Fewer than two samples integrate to zero.
template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::DenseBase<Derived>& samples,
                                   typename Derived::Scalar step) {
  using Scalar = typename Derived::Scalar;
  const Index n = samples.size();
  if (n < 2) return Scalar(0);
  return step * (samples.sum() - Scalar(0.5) * (samples(0) + samples(n - 1)));
}

/// Column-wise trapezoid of a 2 x n sample block.
template <typename Derived>
Vector2<typename Derived::Scalar> trapezoid_columns(const Eigen::MatrixBase<Derived>& samples,
                                                     typename Derived::Scalar step) {
  using Scalar = typename Derived::Scalar;
  const Index n = samples.cols();
  if (n < 2) return Vector2<Scalar>::Zero();
  return step * (samples.rowwise().sum() - Scalar(0.5) * (samples.col(0) + samples.col(n - 1)));
}

/// Weight of node k in an (n+1)-node composite trapezoid, before multiplying by the step.
template <typename Scalar>
constexpr Scalar trapezoid_weight(Index k, Index n) {
  if (n <= 0) return Scalar(0);
  return (k == 0 || k == n) ? Scalar(0.5) : Scalar(1);
}

}  // namespace mfadv
