#pragma once

// Points of H = R^2 x L^2([-d,0]; R^2) on the uniform delay grid and the
// operators of the lifted delay system: the transport semigroup e^{tA},
// its adjoint, the control operator B and the noise operator G.
//
// Grid convention: column i of y1 holds xi_i = -d + i*dt, i = 0..n_delay.
// Where a semigroup output jumps at an interior grid node, the node value is
// set by SeamRule. At the end nodes -d and 0 the limit from inside [-d, 0]
// is used under either rule.

#include "mfadv/grid.hpp"
#include "mfadv/model.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mfadv {

enum class SeamRule {
  left_limit,  // the branch on the left of the jump (the shifted history / zero padding)
  midpoint,    // mean of both one-sided limits; makes the discrete pairings exact
};

template <typename Scalar>
struct HilbertPoint {
  Vector2<Scalar> y0 = Vector2<Scalar>::Zero();
  Samples2<Scalar> y1;

  static HilbertPoint Zero(Index delay_steps) {
    HilbertPoint p;
    p.y1 = Samples2<Scalar>::Zero(2, delay_steps + 1);
    return p;
  }

  Index delay_steps() const { return y1.cols() - 1; }

  HilbertPoint& operator+=(const HilbertPoint& o) {
    y0 += o.y0;
    y1 += o.y1;
    return *this;
  }
  HilbertPoint& operator-=(const HilbertPoint& o) {
    y0 -= o.y0;
    y1 -= o.y1;
    return *this;
  }
  HilbertPoint& operator*=(Scalar s) {
    y0 *= s;
    y1 *= s;
    return *this;
  }
  friend HilbertPoint operator+(HilbertPoint a, const HilbertPoint& b) { return a += b; }
  friend HilbertPoint operator-(HilbertPoint a, const HilbertPoint& b) { return a -= b; }
  friend HilbertPoint operator*(Scalar s, HilbertPoint a) { return a *= s; }
  friend HilbertPoint operator*(HilbertPoint a, Scalar s) { return a *= s; }
};

/// <y, y'> = <y0, y0'> + trapezoid of <y1(xi), y1'(xi)>.
template <typename Scalar>
Scalar inner_product(const HilbertPoint<Scalar>& y, const HilbertPoint<Scalar>& y2, Scalar dt) {
  const VectorX<Scalar> pointwise = (y.y1.array() * y2.y1.array()).colwise().sum().transpose();
  return y.y0.dot(y2.y0) + trapezoid(pointwise, dt);
}

template <typename Scalar>
Scalar norm(const HilbertPoint<Scalar>& y, Scalar dt) {
  using std::sqrt;
  return sqrt(inner_product(y, y, dt));
}

/// exp(tau * A0) for A0 = [[a0, a1], [0, a0 + a1]] in closed form.
template <typename Scalar>
Matrix2<Scalar> mat_exp_A0(Scalar a0, Scalar a1, Scalar tau) {
  using std::abs;
  using std::exp;
  using std::expm1;
  const Scalar e0 = exp(a0 * tau);
  Matrix2<Scalar> E;
  E(0, 0) = e0;
  E(1, 0) = Scalar(0);
  E(1, 1) = exp((a0 + a1) * tau);
  E(0, 1) = abs(a1) < Scalar(1e-12) ? Scalar(0) : e0 * expm1(a1 * tau);
  return E;
}

/// Operator data of the lifted system with a memo of exp(k*dt*A0).
template <typename Scalar>
class LiftedOperators {
 public:
  /// The exponential cache covers offsets 0..cache_steps (defaults to T/dt + d/dt).
  explicit LiftedOperators(const ModelParams<Scalar>& model, Index cache_steps = -1,
                           SeamRule seam = SeamRule::left_limit)
      : a0_(model.a0), a1_(model.a1), b0_(model.b0), sigma_(model.sigma), dt_(model.dt),
        delay_steps_(model.delay_steps()), b1_(model.b1), A0_(drift_matrix(model)), seam_(seam) {
    if (b1_.size() != delay_steps_ + 1) {
      throw std::invalid_argument("b1 sample count does not match the delay grid");
    }
    if (cache_steps < 0) cache_steps = model.time_steps() + delay_steps_;
    cache_.reserve(static_cast<std::size_t>(cache_steps + 1));
    cache_.push_back(Matrix2<Scalar>::Identity());
    for (Index k = 1; k <= cache_steps; ++k) cache_.push_back(mat_exp_A0(a0_, a1_, Scalar(k) * dt_));
  }

  Scalar dt() const { return dt_; }
  Index delay_steps() const { return delay_steps_; }
  Scalar b0() const { return b0_; }
  Scalar sigma() const { return sigma_; }
  const VectorX<Scalar>& b1() const { return b1_; }
  const Matrix2<Scalar>& A0() const { return A0_; }
  SeamRule seam_rule() const { return seam_; }

  /// exp(steps * dt * A0); served from the cache when in range.
  Matrix2<Scalar> exp_A0(Index steps) const {
    if (steps >= 0 && steps < static_cast<Index>(cache_.size())) {
      return cache_[static_cast<std::size_t>(steps)];
    }
    return mat_exp_A0(a0_, a1_, Scalar(steps) * dt_);
  }

  /// Grid step count for time t; throws for negative or off-grid t.
  Index steps_for(Scalar t) const { return grid_steps(t, dt_, "semigroup time"); }

  HilbertPoint<Scalar> zero() const { return HilbertPoint<Scalar>::Zero(delay_steps_); }

 private:
  Scalar a0_, a1_, b0_, sigma_, dt_;
  Index delay_steps_;
  VectorX<Scalar> b1_;
  Matrix2<Scalar> A0_;
  SeamRule seam_;
  std::vector<Matrix2<Scalar>> cache_;
};

/// e^{tA} y with t = steps * dt:
/// ( e^{tA0} y0 + int_{-t}^0 e^{(t+s)A0} y1(s) ds,  y1(. - t) on [-d+t, 0] ).
template <typename Scalar>
HilbertPoint<Scalar> apply_semigroup(const LiftedOperators<Scalar>& ops, Index steps,
                                     const HilbertPoint<Scalar>& y) {
  if (steps < 0) throw std::invalid_argument("semigroup time must be non-negative");
  if (steps == 0) return y;
  const Index n = ops.delay_steps();
  const Scalar dt = ops.dt();
  HilbertPoint<Scalar> out = ops.zero();

  out.y0 = ops.exp_A0(steps) * y.y0;
  const Index span = std::min(steps, n);
  for (Index j = 0; j <= span; ++j) {
    // node xi = -j*dt
    const Scalar w = trapezoid_weight<Scalar>(j, span) * dt;
    out.y0.noalias() += w * (ops.exp_A0(steps - j) * y.y1.col(n - j));
  }

  for (Index i = 0; i <= n; ++i) {
    const Index src = i - steps;
    if (src > 0) {
      out.y1.col(i) = y.y1.col(src);
    } else if (src == 0 && i < n && ops.seam_rule() == SeamRule::midpoint) {
      out.y1.col(i) = Scalar(0.5) * y.y1.col(0);
    }
  }
  return out;
}

/// e^{tA*} y with t = steps * dt:
/// ( e^{tA0*} y0,  e^{(.+t)A0*} y0 on [-t, 0] + y1(. + t) on [-d, -t] ).
template <typename Scalar>
HilbertPoint<Scalar> apply_adjoint_semigroup(const LiftedOperators<Scalar>& ops, Index steps,
                                             const HilbertPoint<Scalar>& y) {
  if (steps < 0) throw std::invalid_argument("semigroup time must be non-negative");
  if (steps == 0) return y;
  const Index n = ops.delay_steps();
  HilbertPoint<Scalar> out = ops.zero();
  out.y0 = ops.exp_A0(steps).transpose() * y.y0;
  for (Index i = 0; i <= n; ++i) {
    const Index lag = n - i;  // xi = -lag*dt
    if (lag < steps) {
      out.y1.col(i) = ops.exp_A0(steps - lag).transpose() * y.y0;
    } else if (lag > steps) {
      out.y1.col(i) = y.y1.col(i + steps);
    } else if (i == 0) {
      out.y1.col(i) = y.y0;
    } else if (ops.seam_rule() == SeamRule::midpoint) {
      out.y1.col(i) = Scalar(0.5) * (y.y0 + y.y1.col(n));
    } else {
      out.y1.col(i) = y.y1.col(n);
    }
  }
  return out;
}

/// B u = (b0 u, b1(.) u).
template <typename Scalar>
HilbertPoint<Scalar> apply_control_operator(const LiftedOperators<Scalar>& ops,
                                            const Vector2<Scalar>& u) {
  HilbertPoint<Scalar> out;
  out.y0 = ops.b0() * u;
  out.y1 = u * ops.b1().transpose();
  return out;
}

/// B* y = b0 y0 + int b1(xi) y1(xi) dxi.
template <typename Scalar>
Vector2<Scalar> control_adjoint(const LiftedOperators<Scalar>& ops, const HilbertPoint<Scalar>& y) {
  const Samples2<Scalar> weighted = y.y1 * ops.b1().asDiagonal();
  return ops.b0() * y.y0 + trapezoid_columns(weighted, ops.dt());
}

/// G w = ((sigma w, 0), 0).
template <typename Scalar>
HilbertPoint<Scalar> apply_noise_operator(const LiftedOperators<Scalar>& ops, Scalar w) {
  HilbertPoint<Scalar> out = ops.zero();
  out.y0(0) = ops.sigma() * w;
  return out;
}

/// Q = G*G, a scalar since the noise is one-dimensional.
template <typename Scalar>
Scalar noise_covariance(const LiftedOperators<Scalar>& ops) {
  return ops.sigma() * ops.sigma();
}

/// Initial point of the lifted system for goodwill x and control history delta:
/// y0 = (x, x), y1(xi) = int_{-d}^{xi} b1(zeta) delta(zeta - xi) dzeta in both components.
template <typename Scalar>
HilbertPoint<Scalar> lift_initial_state(const LiftedOperators<Scalar>& ops, Scalar x,
                                        const VectorX<Scalar>& delta) {
  const Index n = ops.delay_steps();
  if (delta.size() != n + 1) {
    throw std::invalid_argument("delta sample count does not match the delay grid");
  }
  const Scalar dt = ops.dt();
  HilbertPoint<Scalar> out = ops.zero();
  out.y0.setConstant(x);
  for (Index i = 1; i <= n; ++i) {
    Scalar acc(0);
    for (Index j = 0; j <= i; ++j) {
      acc += trapezoid_weight<Scalar>(j, i) * ops.b1()(j) * delta(n + j - i);
    }
    out.y1.col(i).setConstant(acc * dt);
  }
  return out;
}

}  // namespace mfadv
