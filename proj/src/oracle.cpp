#include "mfadv/oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mfadv {

double hamiltonian_cv(const LQParams<double>& lq, const Eigen::Vector2d& y0, double u,
                      const Eigen::Vector2d& q) {
  const Eigen::Vector2d uu(u, u);
  return running_reward<double>(lq, 0.0, y0, uu) + uu.dot(q);
}

double hamiltonian(const LQParams<double>& lq, const Eigen::Vector2d& y0, const Eigen::Vector2d& q) {
  return hamiltonian_control_part<double>(lq, q) + lq.alpha0 * y0(0) - lq.alpha1 * y0(1);
}

double scan_argmax(const std::function<double(double)>& f, double lo, double hi, double step) {
  if (!(step > 0) || hi < lo) throw std::invalid_argument("invalid scan range");
  const auto count = static_cast<Index>(std::floor((hi - lo) / step + 1e-9));
  double best_x = lo;
  double best = f(lo);
  for (Index i = 1; i <= count; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

Eigen::Matrix2d expm_scaling_squaring(const Eigen::Matrix2d& M) {
  const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::Matrix2d S = M / std::ldexp(1.0, squarings);
  Eigen::Matrix2d term = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d sum = Eigen::Matrix2d::Identity();
  for (int k = 1; k <= 24; ++k) {
    term = term * S / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

Index ControlGrid::piece_of(Index node) const {
  const auto it = std::upper_bound(knots.begin(), knots.end(), node);
  const Index piece = static_cast<Index>(it - knots.begin()) - 1;
  return std::clamp<Index>(piece, 0, pieces() - 1);
}

Eigen::VectorXd ControlGrid::expand() const {
  const Index L = knots.back();
  Eigen::VectorXd out(L + 1);
  for (Index k = 0; k < pieces(); ++k) {
    const Index end = (k + 1 == pieces()) ? L + 1 : knots[static_cast<std::size_t>(k + 1)];
    for (Index n = knots[static_cast<std::size_t>(k)]; n < end; ++n) out(n) = coefficients(k);
  }
  return out;
}

ControlGrid make_control_grid(Index steps, Index pieces) {
  if (pieces < 1) throw std::invalid_argument("need at least one piece");
  if (pieces > steps) throw std::invalid_argument("more pieces than grid steps");
  ControlGrid grid;
  for (Index k = 0; k <= pieces; ++k) grid.knots.push_back(k * steps / pieces);
  grid.coefficients = Eigen::VectorXd::Zero(pieces);
  return grid;
}

namespace {

/// Left-point weights: control value k acts on [s_k, s_{k+1}) exactly as in the Euler step.
Eigen::VectorXd left_point_weights(const Problem& problem, Index L) {
  Eigen::VectorXd w(L + 1);
  for (Index k = 0; k <= L; ++k) {
    w(k) = k < L ? problem.dt() * std::exp(-problem.model.r * static_cast<double>(k) * problem.dt()) : 0.0;
  }
  return w;
}

Eigen::VectorXd discounted_weights(const Problem& problem, Index L) {
  Eigen::VectorXd w(L + 1);
  for (Index k = 0; k <= L; ++k) {
    w(k) = trapezoid_weight<double>(k, L) * problem.dt() *
           std::exp(-problem.model.r * static_cast<double>(k) * problem.dt());
  }
  return w;
}

/// The oracle treats controls as right-continuous step functions, so the seam
/// sample belongs to the control and not to the history.
ControlPath seam_from_control(const ControlPath& u) {
  Eigen::VectorXd history = u.history();
  history(history.size() - 1) = u.value(0, 0);
  return ControlPath::deterministic(std::move(history), u.row(0));
}

double terminal_discount(const Problem& problem, Index L) {
  return std::exp(-problem.model.r * static_cast<double>(L) * problem.dt());
}

}  // namespace

double deterministic_objective(const Problem& problem, Index start, double x0, const ControlPath& u) {
  const Eigen::VectorXd M = solve_odde(problem, start, x0, seam_from_control(u));
  const Index L = M.size() - 1;
  const Eigen::VectorXd w = left_point_weights(problem, L);
  double acc = 0;
  for (Index k = 0; k <= L; ++k) {
    if (w(k) == 0) continue;
    const double uk = u.value(0, k);
    acc += w(k) * running_reward<double>(problem.lq, 0.0, Eigen::Vector2d(M(k), M(k)),
                                         Eigen::Vector2d(uk, uk));
  }
  return acc + terminal_discount(problem, L) *
                   terminal_reward<double>(problem.lq, Eigen::Vector2d(M(L), M(L)));
}

BruteForceResult brute_force_deterministic(const Problem& problem, Index start, double x0,
                                           const Eigen::VectorXd& delta, Index pieces,
                                           Assembly assembly) {
  const Index N = problem.time_steps();
  if (start < 0 || start >= N) throw std::invalid_argument("start node must leave at least one step");
  const Index L = N - start;
  BruteForceResult out;
  out.grid = make_control_grid(L, pieces);
  const Index K = out.grid.pieces();

  auto control_of = [&](const Eigen::VectorXd& c) {
    ControlGrid g = out.grid;
    g.coefficients = c;
    return ControlPath::deterministic(delta, g.expand());
  };
  auto objective = [&](const Eigen::VectorXd& c) {
    return deterministic_objective(problem, start, x0, control_of(c));
  };

  Eigen::VectorXd gradient(K);
  Eigen::MatrixXd H(K, K);
  if (assembly == Assembly::sensitivity) {
    const auto& lq = problem.lq;
    const Eigen::VectorXd w = left_point_weights(problem, L);
    const double state_coef = lq.alpha0 - lq.alpha1;
    const double terminal_coef = (lq.lambda0 - lq.lambda1) * terminal_discount(problem, L);
    const double linear_coef = -(lq.beta0 + lq.beta1);
    const Eigen::VectorXd no_history = Eigen::VectorXd::Zero(delta.size());
    H.setZero();
    for (Index k = 0; k < K; ++k) {
      ControlGrid g = out.grid;
      g.coefficients.setZero();
      g.coefficients(k) = 1.0;
      const Eigen::VectorXd chi = g.expand();
      const Eigen::VectorXd S = solve_odde(problem, start, 0.0, seam_from_control(ControlPath::deterministic(no_history, chi)));
      gradient(k) = state_coef * w.dot(S) + terminal_coef * S(L) + linear_coef * w.dot(chi);
      H(k, k) = 2.0 * lq.gamma_sum() * w.dot(chi);
    }
  } else {
    const double h = 1e-6;
    auto grad_at = [&](const Eigen::VectorXd& c) {
      Eigen::VectorXd g(K);
      for (Index k = 0; k < K; ++k) {
        Eigen::VectorXd cp = c, cm = c;
        cp(k) += h;
        cm(k) -= h;
        g(k) = (objective(cp) - objective(cm)) / (2 * h);
      }
      return g;
    };
    gradient = grad_at(Eigen::VectorXd::Zero(K));
    // The objective is quadratic, so differencing gradients at +-e_j is exact up to rounding.
    for (Index j = 0; j < K; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(K);
      e(j) = 1.0;
      H.col(j) = -(grad_at(e) - grad_at(-e)) / 2.0;
    }
    H = 0.5 * (H + H.transpose()).eval();
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  out.condition = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(out.condition <= 1e12)) {
    throw std::runtime_error("brute-force system is singular or ill-conditioned (condition " +
                             std::to_string(out.condition) + ")");
  }
  out.grid.coefficients = H.ldlt().solve(gradient);
  out.gradient_at_zero = gradient;
  out.hessian = H;
  out.value = objective(out.grid.coefficients);
  return out;
}

IdentityReport check_fundamental_identity(const Problem& problem, const LQSolution<double>& sol,
                                          Index start, const HilbertPoint<double>& y,
                                          const ControlPath& u, const NoiseBatch& noise) {
  if (!u.is_deterministic()) throw std::invalid_argument("the identity check takes a deterministic control");
  const SimBatch batch = simulate_lifted(problem, start, y, u, u, noise);
  const Eigen::VectorXd J = lifted_path_objectives(problem, batch, u, u);
  const Index L = batch.nodes() - 1;
  const Eigen::VectorXd w = discounted_weights(problem, L);
  const auto& lq = problem.lq;

  IdentityReport rep;
  rep.min_gap_integrand = std::numeric_limits<double>::infinity();
  Eigen::VectorXd gap(batch.paths());
  for (Index i = 0; i < batch.paths(); ++i) {
    double acc = 0;
    for (Index k = 0; k <= L; ++k) {
      const Eigen::Vector2d q = sol.q.col(start + k);
      const Eigen::Vector2d y0(batch.x(i, k), batch.m(k));
      const double integrand = hamiltonian(lq, y0, q) - hamiltonian_cv(lq, y0, u.value(0, k), q);
      rep.min_gap_integrand = std::min(rep.min_gap_integrand, integrand);
      acc += w(k) * integrand;
    }
    gap(i) = acc;
  }
  const Estimate obj = summarize(J);
  const Estimate g = summarize(gap);
  const Estimate right = summarize(J + gap);
  rep.left = value_function(sol, start, y);
  rep.objective = obj.mean;
  rep.objective_std_error = obj.std_error;
  rep.gap_integral = g.mean;
  rep.gap_std_error = g.std_error;
  rep.right = right.mean;
  rep.right_std_error = right.std_error;
  rep.pass = std::abs(rep.left - rep.right) <= 3 * rep.right_std_error + 1e-12 &&
             rep.min_gap_integrand >= -1e-12;
  return rep;
}

JensenReport check_jensen_dominance(const Problem& problem, Index start, const HilbertPoint<double>& y,
                                    const ControlPath& u, const NoiseBatch& noise) {
  const ControlPath ubar = u.mean();
  const SimBatch lhs_batch = simulate_lifted(problem, start, y, u, ubar, noise);
  const SimBatch rhs_batch = simulate_lifted(problem, start, y, ubar, ubar, noise);
  const Estimate lhs = summarize(lifted_path_objectives(problem, lhs_batch, u, ubar));
  const Estimate rhs = summarize(lifted_path_objectives(problem, rhs_batch, ubar, ubar));

  JensenReport rep;
  rep.lhs = lhs.mean;
  rep.lhs_std_error = lhs.std_error;
  rep.rhs = rhs.mean;
  rep.rhs_std_error = rhs.std_error;
  rep.combined_std_error = std::hypot(lhs.std_error, rhs.std_error);
  rep.dominance = rep.lhs <= rep.rhs + 3 * rep.combined_std_error;

  // Both runs share the second coordinate (it sees only z), so compare the first.
  rep.mean_identity = true;
  for (Index k = 0; k < lhs_batch.nodes(); ++k) {
    const Estimate diff = summarize(lhs_batch.x.col(k) - rhs_batch.x.col(k));
    const double tol = 3 * diff.std_error + 1e-12 * (1 + std::abs(rhs_batch.x.col(k).mean()));
    rep.mean_gap = std::max(rep.mean_gap, std::abs(diff.mean));
    rep.mean_gap_tolerance = std::max(rep.mean_gap_tolerance, tol);
    if (std::abs(diff.mean) > tol) rep.mean_identity = false;
  }
  return rep;
}

BResidual b_ode_residual(const LQSolution<double>& sol, const LQParams<double>& lq, double r) {
  const Index N = sol.time_steps;
  BResidual out;
  double num = 0, den = 0;
  for (Index n = 1; n < N; ++n) {
    const double bdot = (sol.b(n + 1) - sol.b(n)) / sol.dt;
    const double h = hamiltonian_control_part<double>(lq, sol.q.col(n));
    out.max_abs = std::max(out.max_abs, std::abs(bdot + h - r * sol.b(n)));
    num += (r * sol.b(n) - bdot) * h;
    den += h * h;
  }
  out.ratio = den > 0 ? num / den : 1.0;
  return out;
}

std::vector<WeakTestPoint> weak_test_points(const LiftedOperators<double>& ops, double d) {
  const Index n = ops.delay_steps();
  const double dt = ops.dt();
  std::vector<WeakTestPoint> points;
  auto finish = [&](WeakTestPoint p) {
    p.Ay.y0 = ops.A0() * p.y.y0 + p.y.y1.col(n);
    points.push_back(std::move(p));
  };

  WeakTestPoint p1{ops.zero(), ops.zero()};
  p1.y.y0 << 0.7, -0.4;
  for (Index i = 0; i <= n; ++i) {
    const double xi = -d + static_cast<double>(i) * dt;
    const double s = xi + d;
    p1.y.y1.col(i) << s * std::cos(3 * xi), s * s;
    p1.Ay.y1.col(i) << -(std::cos(3 * xi) - 3 * s * std::sin(3 * xi)), -2 * s;
  }
  finish(std::move(p1));

  WeakTestPoint p2{ops.zero(), ops.zero()};
  p2.y.y0 << 1.0, 0.0;
  const double w = std::numbers::pi / d;
  for (Index i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) * dt;
    p2.y.y1.col(i) << std::sin(w * s), 0.0;
    p2.Ay.y1.col(i) << -w * std::cos(w * s), 0.0;
  }
  finish(std::move(p2));

  WeakTestPoint p3{ops.zero(), ops.zero()};
  p3.y.y0 << 0.0, 1.0;
  for (Index i = 0; i <= n; ++i) {
    const double xi = -d + static_cast<double>(i) * dt;
    const double s = xi + d;
    p3.y.y1.col(i) << 0.0, s * std::exp(xi);
    p3.Ay.y1.col(i) << 0.0, -(1 + s) * std::exp(xi);
  }
  finish(std::move(p3));
  return points;
}

double adjoint_weak_residual(const LQSolution<double>& sol, const LiftedOperators<double>& ops,
                             const LQParams<double>& lq, double r,
                             const std::vector<WeakTestPoint>& points) {
  const Index N = sol.time_steps;
  const double dt = sol.dt;
  const HilbertPoint<double> source = running_adjoint_source(ops, lq);
  double worst = 0;
  for (const auto& p : points) {
    for (Index n = 1; n + 2 <= N; ++n) {
      const auto& a = sol.a;
      const double ddt = (inner_product(a[static_cast<std::size_t>(n + 1)], p.y, dt) -
                          inner_product(a[static_cast<std::size_t>(n - 1)], p.y, dt)) /
                         (2 * dt);
      const auto& an = a[static_cast<std::size_t>(n)];
      const double res = ddt + inner_product(an, p.Ay, dt) + inner_product(source, p.y, dt) -
                         r * inner_product(an, p.y, dt);
      worst = std::max(worst, std::abs(res));
    }
  }
  return worst;
}

double exp_norm_bound(const LiftedOperators<double>& ops, Index steps) {
  double out = 0;
  for (Index k = 0; k <= steps; ++k) {
    out = std::max(out, Eigen::JacobiSVD<Eigen::Matrix2d>(ops.exp_A0(k)).singularValues()(0));
  }
  return out;
}

namespace {

double sup_scale(const HilbertPoint<double>& y) {
  return y.y0.norm() + (y.y1.cols() > 0 ? y.y1.colwise().norm().maxCoeff() : 0.0);
}

}  // namespace

AlgebraResidual semigroup_law_residual(const LiftedOperators<double>& ops, const HilbertPoint<double>& y,
                                       Index t_steps, Index s_steps, bool adjoint) {
  auto apply = [&](Index k, const HilbertPoint<double>& p) {
    return adjoint ? apply_adjoint_semigroup(ops, k, p) : apply_semigroup(ops, k, p);
  };
  const HilbertPoint<double> direct = apply(t_steps + s_steps, y);
  const HilbertPoint<double> composed = apply(t_steps, apply(s_steps, y));
  const double dt = ops.dt();
  AlgebraResidual out;
  out.residual = norm(direct - composed, dt);
  out.budget = exp_norm_bound(ops, t_steps + s_steps) * sup_scale(y) * (2 * dt + 2 * std::sqrt(dt));
  return out;
}

AlgebraResidual adjoint_pairing_residual(const LiftedOperators<double>& ops,
                                         const HilbertPoint<double>& y,
                                         const HilbertPoint<double>& y2, Index t_steps) {
  const double dt = ops.dt();
  AlgebraResidual out;
  out.residual = std::abs(inner_product(apply_semigroup(ops, t_steps, y), y2, dt) -
                          inner_product(y, apply_adjoint_semigroup(ops, t_steps, y2), dt));
  out.budget = 2 * dt * exp_norm_bound(ops, t_steps) * sup_scale(y) * sup_scale(y2);
  return out;
}

AlgebraResidual control_duality_residual(const LiftedOperators<double>& ops, const Eigen::Vector2d& u2,
                                         const HilbertPoint<double>& y) {
  AlgebraResidual out;
  out.residual = std::abs(inner_product(apply_control_operator(ops, u2), y, ops.dt()) -
                          u2.dot(control_adjoint(ops, y)));
  return out;
}

HilbertPoint<double> random_point(std::mt19937_64& rng, const LiftedOperators<double>& ops) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  HilbertPoint<double> y = ops.zero();
  y.y0 << normal(rng), normal(rng);
  const Index n = ops.delay_steps();
  for (int c = 0; c < 2; ++c) {
    const double a = normal(rng), b = normal(rng), p = phase(rng);
    for (Index i = 0; i <= n; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(std::max<Index>(n, 1));
      y.y1(c, i) = a + b * std::sin(2 * std::numbers::pi * s + p) + 0.1 * normal(rng);
    }
  }
  return y;
}

Eigen::VectorXd random_smooth_values(std::mt19937_64& rng, const Problem& problem, Index start,
                                     double amplitude) {
  std::uniform_real_distribution<double> coef(-amplitude, amplitude);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng), p1 = phase(rng), p2 = phase(rng);
  const Index L = problem.time_steps() - start;
  const double T = problem.model.T;
  const double pi = std::numbers::pi;
  Eigen::VectorXd out(L + 1);
  for (Index k = 0; k <= L; ++k) {
    const double s = static_cast<double>(start + k) * problem.dt();
    out(k) = c0 + c1 * std::sin(pi * s / T + p1) + c2 * std::sin(2 * pi * s / T + p2);
  }
  return out;
}

ControlPath random_adapted_control(std::mt19937_64& rng, const ControlPath& base, const NoiseBatch& noise) {
  if (!base.is_deterministic()) throw std::invalid_argument("base control must be deterministic");
  if (noise.steps() + 1 != base.nodes()) throw std::invalid_argument("noise does not match the control grid");
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double th1 = unit(rng), th2 = 0.5 * unit(rng), th3 = unit(rng);
  const double inv_sqrt_dt = 1.0 / std::sqrt(noise.dt);
  Eigen::MatrixXd values(noise.paths(), base.nodes());
  for (Index i = 0; i < noise.paths(); ++i) {
    double W = 0;
    for (Index k = 0; k < base.nodes(); ++k) {
      const double last = k > 0 ? noise.increments(i, k - 1) : 0.0;
      W += last;
      values(i, k) = base.value(0, k) + th1 * W + th2 * last * inv_sqrt_dt + th3 * std::sin(W);
    }
  }
  return ControlPath::stochastic(base.history(), std::move(values));
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mfadv
