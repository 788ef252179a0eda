#pragma once

// Problem data for the goodwill model with advertising carryover and
// mean-field terms, plus the linear-quadratic reward pair.

#include "mfadv/grid.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace mfadv {

/// Dynamics coefficients and initial data.
///
/// `b1` and `delta` are sampled on the delay grid xi_i = -d + i*dt,
/// i = 0..delay_steps(); the same `dt` is the global time step.
template <typename Scalar>
struct ModelParams {
  Scalar a0{0};     // goodwill self-dynamics rate
  Scalar a1{0};     // mean-field rate
  Scalar b0{0};     // instantaneous advertising effectiveness
  Scalar sigma{0};  // noise intensity
  Scalar d{1};      // delay horizon
  Scalar T{1};      // terminal time
  Scalar r{0};      // discount rate
  Scalar x0{0};     // initial goodwill
  Scalar dt{0.01};  // time and delay grid step
  VectorX<Scalar> b1;     // carryover density
  VectorX<Scalar> delta;  // control history before the start time

  Index delay_steps() const { return grid_steps(d, dt, "delay horizon"); }
  Index time_steps() const { return grid_steps(T, dt, "terminal time"); }
};

/// Coefficients of f(t,x,m,u,z) = a0 x - a1 m - b0 u - g0 u^2 - b1 z - g1 z^2 and g(x,m) = l0 x - l1 m.
template <typename Scalar>
struct LQParams {
  Scalar alpha0{0}, alpha1{0};
  Scalar beta0{0}, beta1{0};
  Scalar gamma0{1}, gamma1{1};
  Scalar lambda0{0}, lambda1{0};

  Scalar gamma_sum() const { return gamma0 + gamma1; }
};

template <typename Scalar>
struct DerivedVectors {
  Vector2<Scalar> alpha_tilde;
  Vector2<Scalar> beta_tilde;
  Vector2<Scalar> lambda_tilde;
  Matrix2<Scalar> A0;
};

template <typename Scalar>
Matrix2<Scalar> drift_matrix(const ModelParams<Scalar>& model) {
  Matrix2<Scalar> A0;
  A0 << model.a0, model.a1, Scalar(0), model.a0 + model.a1;
  return A0;
}

template <typename Scalar>
DerivedVectors<Scalar> derive(const ModelParams<Scalar>& model, const LQParams<Scalar>& lq) {
  DerivedVectors<Scalar> out;
  out.alpha_tilde << lq.alpha0, -lq.alpha1;
  out.beta_tilde << lq.beta0, lq.beta1;
  out.lambda_tilde << lq.lambda0, -lq.lambda1;
  out.A0 = drift_matrix(model);
  return out;
}

/// Lists every violated constraint; empty means the data are admissible.
template <typename Scalar>
std::vector<std::string> validate(const ModelParams<Scalar>& model, const LQParams<Scalar>& lq) {
  std::vector<std::string> errors;
  if (!(model.dt > Scalar(0))) errors.emplace_back("dt must be > 0");
  if (!(model.d > Scalar(0))) errors.emplace_back("d must be > 0");
  if (!(model.T > Scalar(0))) errors.emplace_back("T must be > 0");
  if (model.b0 < Scalar(0)) errors.emplace_back("b0 must be >= 0");
  if (model.sigma < Scalar(0)) errors.emplace_back("sigma must be >= 0");
  if (!(lq.gamma0 > Scalar(0))) errors.emplace_back("gamma0 must be > 0");
  if (!(lq.gamma1 > Scalar(0))) errors.emplace_back("gamma1 must be > 0");

  if (model.dt > Scalar(0)) {
    if (model.d > Scalar(0) && !is_grid_multiple(model.d, model.dt)) {
      errors.emplace_back("d must be an integer multiple of dt");
    }
    if (model.T > Scalar(0) && !is_grid_multiple(model.T, model.dt)) {
      errors.emplace_back("T must be an integer multiple of dt");
    }
    if (model.d > Scalar(0) && is_grid_multiple(model.d, model.dt)) {
      const Index expected = model.delay_steps() + 1;
      if (model.b1.size() != expected) {
        errors.emplace_back("b1 must have " + std::to_string(expected) + " samples");
      }
      if (model.delta.size() != expected) {
        errors.emplace_back("delta must have " + std::to_string(expected) + " samples");
      }
    }
  }
  if ((model.b1.array() < Scalar(0)).any()) errors.emplace_back("b1 must be nonnegative");
  if (!model.b1.allFinite()) errors.emplace_back("b1 must be finite");
  if (!model.delta.allFinite()) errors.emplace_back("delta must be finite");
  return errors;
}

/// Running reward for state (x, m) and control (u, z); `t` is unused in the LQ case.
template <typename Scalar>
Scalar running_reward(const LQParams<Scalar>& lq, Scalar /*t*/, const Vector2<Scalar>& state,
                      const Vector2<Scalar>& control) {
  const Scalar u = control(0);
  const Scalar z = control(1);
  return lq.alpha0 * state(0) - lq.alpha1 * state(1) - lq.beta0 * u - lq.gamma0 * u * u -
         lq.beta1 * z - lq.gamma1 * z * z;
}

template <typename Scalar>
Scalar terminal_reward(const LQParams<Scalar>& lq, const Vector2<Scalar>& state) {
  return lq.lambda0 * state(0) - lq.lambda1 * state(1);
}

// Kernel presets sampled on the delay grid [-d, 0].

template <typename Scalar>
VectorX<Scalar> exponential_kernel(Scalar d, Scalar dt, Scalar scale = Scalar(1),
                                   Scalar rate = Scalar(1)) {
  using std::exp;
  const Index n = grid_steps(d, dt, "delay horizon");
  VectorX<Scalar> out(n + 1);
  for (Index i = 0; i <= n; ++i) out(i) = scale * exp(rate * (-d + Scalar(i) * dt));
  return out;
}

template <typename Scalar>
VectorX<Scalar> uniform_kernel(Scalar d, Scalar dt, Scalar value = Scalar(1)) {
  return VectorX<Scalar>::Constant(grid_steps(d, dt, "delay horizon") + 1, value);
}

template <typename Scalar>
VectorX<Scalar> zero_kernel(Scalar d, Scalar dt) {
  return VectorX<Scalar>::Zero(grid_steps(d, dt, "delay horizon") + 1);
}

}  // namespace mfadv
