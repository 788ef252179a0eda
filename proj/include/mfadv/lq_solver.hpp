#pragma once

// Explicit solution of the auxiliary linear-quadratic HJB equation.
//
// The value function is affine in the lifted state, v(t, y) = <a(t), y> + b(t),
// where a solves the adjoint evolution equation backward from (lambda~, 0)
// and b collects the maximized Hamiltonian along B*a. The optimal control is
// open loop: u*(s) = <B*a(s) - beta~, (1,1)> / (2 (gamma0 + gamma1)).

#include "mfadv/grid.hpp"
#include "mfadv/hilbert.hpp"
#include "mfadv/model.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mfadv {

enum class AdjointScheme {
  recursive,  // a(t - dt) from a(t): one adjoint step plus one quadrature increment
  direct,     // each a(t) from the full mild formula
};

enum class BVariant {
  ode,     // solves b' + h - r b = 0
  halved,  // carries an extra factor 1/2 in front of the integral; fails the ODE
};

struct SolverOptions {
  AdjointScheme scheme = AdjointScheme::recursive;
  BVariant b_variant = BVariant::ode;
};

template <typename Scalar>
struct LQSolution {
  Scalar dt{};
  Index time_steps{};  // node n sits at t = n * dt, n = 0..time_steps
  std::vector<HilbertPoint<Scalar>> a;
  VectorX<Scalar> b;
  Samples2<Scalar> q;  // q(s) = B* a(s)
  VectorX<Scalar> u_star;
  Scalar value_at_start{};  // v(0, lift(x0, delta))

  Scalar time(Index n) const { return Scalar(n) * dt; }
};

/// <q - beta~, (1,1)>, the coefficient of u in the diagonal Hamiltonian.
template <typename Scalar>
Scalar control_slope(const LQParams<Scalar>& lq, const Vector2<Scalar>& q) {
  return (q(0) - lq.beta0) + (q(1) - lq.beta1);
}

/// Maximizer of <q - beta~, (1,1)> u - (gamma0 + gamma1) u^2.
template <typename Scalar>
Scalar optimal_control(const LQParams<Scalar>& lq, const Vector2<Scalar>& q) {
  return control_slope(lq, q) / (Scalar(2) * lq.gamma_sum());
}

/// (<q - beta~, (1,1)>)^2 / (4 (gamma0 + gamma1)), the control part of the maximized Hamiltonian.
template <typename Scalar>
Scalar hamiltonian_control_part(const LQParams<Scalar>& lq, const Vector2<Scalar>& q) {
  const Scalar k = control_slope(lq, q);
  return k * k / (Scalar(4) * lq.gamma_sum());
}

template <typename Scalar>
HilbertPoint<Scalar> terminal_adjoint(const LiftedOperators<Scalar>& ops, const LQParams<Scalar>& lq) {
  HilbertPoint<Scalar> p = ops.zero();
  p.y0 << lq.lambda0, -lq.lambda1;
  return p;
}

template <typename Scalar>
HilbertPoint<Scalar> running_adjoint_source(const LiftedOperators<Scalar>& ops,
                                            const LQParams<Scalar>& lq) {
  HilbertPoint<Scalar> p = ops.zero();
  p.y0 << lq.alpha0, -lq.alpha1;
  return p;
}

/// Mild formula at node n of an N-step horizon:
/// a(t) = e^{-r(T-t)} e^{(T-t)A*} (lambda~,0) + int_t^T e^{-r(s-t)} e^{(s-t)A*} (alpha~,0) ds.
template <typename Scalar>
HilbertPoint<Scalar> compute_a_direct(const LiftedOperators<Scalar>& ops, const LQParams<Scalar>& lq,
                                      Scalar r, Index time_steps, Index n) {
  using std::exp;
  if (n < 0 || n > time_steps) throw std::invalid_argument("node outside the time grid");
  const Scalar dt = ops.dt();
  const Index m = time_steps - n;
  const HilbertPoint<Scalar> source = running_adjoint_source(ops, lq);
  HilbertPoint<Scalar> out =
      exp(-r * Scalar(m) * dt) * apply_adjoint_semigroup(ops, m, terminal_adjoint(ops, lq));
  for (Index k = 0; k <= m; ++k) {
    const Scalar w = trapezoid_weight<Scalar>(k, m) * dt * exp(-r * Scalar(k) * dt);
    if (w != Scalar(0)) out += w * apply_adjoint_semigroup(ops, k, source);
  }
  return out;
}

template <typename Scalar>
Scalar value_function(const LQSolution<Scalar>& sol, Index n, const HilbertPoint<Scalar>& y) {
  return inner_product(sol.a.at(static_cast<std::size_t>(n)), y, sol.dt) + sol.b(n);
}

template <typename Scalar>
LQSolution<Scalar> solve_lq(const LiftedOperators<Scalar>& ops, const ModelParams<Scalar>& model,
                            const LQParams<Scalar>& lq, const SolverOptions& options = {}) {
  using std::exp;
  const Index N = model.time_steps();
  const Scalar dt = model.dt;
  const Scalar decay = exp(-model.r * dt);

  LQSolution<Scalar> sol;
  sol.dt = dt;
  sol.time_steps = N;
  sol.a.resize(static_cast<std::size_t>(N + 1));

  if (options.scheme == AdjointScheme::recursive) {
    const HilbertPoint<Scalar> source = running_adjoint_source(ops, lq);
    const HilbertPoint<Scalar> increment =
        (Scalar(0.5) * dt) * (source + decay * apply_adjoint_semigroup(ops, 1, source));
    sol.a[static_cast<std::size_t>(N)] = terminal_adjoint(ops, lq);
    for (Index n = N; n > 0; --n) {
      sol.a[static_cast<std::size_t>(n - 1)] =
          decay * apply_adjoint_semigroup(ops, 1, sol.a[static_cast<std::size_t>(n)]) + increment;
    }
  } else {
    for (Index n = 0; n <= N; ++n) {
      sol.a[static_cast<std::size_t>(n)] = compute_a_direct(ops, lq, model.r, N, n);
    }
  }

  sol.q.resize(2, N + 1);
  sol.u_star.resize(N + 1);
  VectorX<Scalar> h(N + 1);
  for (Index n = 0; n <= N; ++n) {
    sol.q.col(n) = control_adjoint(ops, sol.a[static_cast<std::size_t>(n)]);
    sol.u_star(n) = optimal_control<Scalar>(lq, sol.q.col(n));
    h(n) = hamiltonian_control_part<Scalar>(lq, sol.q.col(n));
  }

  // b(t) = int_t^T e^{-r(s-t)} h(s) ds, accumulated backward one trapezoid panel at a time.
  sol.b.resize(N + 1);
  sol.b(N) = Scalar(0);
  for (Index n = N; n > 0; --n) {
    sol.b(n - 1) = decay * sol.b(n) + Scalar(0.5) * dt * (h(n - 1) + decay * h(n));
  }
  if (options.b_variant == BVariant::halved) sol.b *= Scalar(0.5);

  sol.value_at_start = value_function(sol, 0, lift_initial_state(ops, model.x0, model.delta));
  return sol;
}

template <typename Scalar>
struct OriginalSolution {
  VectorX<Scalar> control;  // u*(s) on nodes n0..N
  Scalar value{};           // value of the original mean-field problem at (t_{n0}, x)
};

/// Optimal control and value of the original problem started at node n0 with goodwill x.
template <typename Scalar>
OriginalSolution<Scalar> solve_original(const LQSolution<Scalar>& sol,
                                        const LiftedOperators<Scalar>& ops, Index n0, Scalar x,
                                        const VectorX<Scalar>& delta) {
  if (n0 < 0 || n0 > sol.time_steps) throw std::invalid_argument("start node outside the time grid");
  OriginalSolution<Scalar> out;
  out.control = sol.u_star.tail(sol.time_steps - n0 + 1);
  out.value = value_function(sol, n0, lift_initial_state(ops, x, delta));
  return out;
}

}  // namespace mfadv
