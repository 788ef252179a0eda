#include "mfadv/lq_solver.hpp"
#include "mfadv/oracle.hpp"
#include "mfadv/problem.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mfadv;

namespace {

LQSolution<double> solve(const Problem& p, SolverOptions options = {}) {
  return solve_lq(p.ops, p.model, p.lq, options);
}

double sup_gap(const HilbertPoint<double>& a, const HilbertPoint<double>& b) {
  return std::max((a.y0 - b.y0).cwiseAbs().maxCoeff(), (a.y1 - b.y1).cwiseAbs().maxCoeff());
}

}  // namespace

TEST(LQSolver, TerminalConditionsExact) {
  const Problem p(fixtures::coarse_fixture().model(), fixture_config().lq);
  const auto sol = solve(p);
  const auto& aT = sol.a.back();
  EXPECT_EQ(aT.y0(0), p.lq.lambda0);
  EXPECT_EQ(aT.y0(1), -p.lq.lambda1);
  EXPECT_EQ(aT.y1.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(sol.b(sol.time_steps), 0.0);
  EXPECT_EQ(sol.q.col(sol.time_steps), p.model.b0 * p.derived.lambda_tilde);
  const double uT = (p.model.b0 * p.derived.lambda_tilde - p.derived.beta_tilde).sum() / (2 * p.lq.gamma_sum());
  EXPECT_DOUBLE_EQ(sol.u_star(sol.time_steps), uT);
}

TEST(LQSolver, NoRunningRewardIsPureTransport) {
  RunConfig c = fixtures::coarse_fixture();
  c.lq.alpha0 = c.lq.alpha1 = 0;
  c.r = 0;
  const Problem p(c.model(), c.lq);
  const auto sol = solve(p);
  const Index N = sol.time_steps;
  for (Index n : {Index(0), N / 3, N - 7}) {
    const auto exact = apply_adjoint_semigroup(p.ops, N - n, terminal_adjoint(p.ops, p.lq));
    EXPECT_LE(sup_gap(sol.a[static_cast<std::size_t>(n)], exact), 1e-12) << n;
    const Eigen::Vector2d y0 = p.ops.exp_A0(N - n).transpose() * p.derived.lambda_tilde;
    EXPECT_LE((sol.a[static_cast<std::size_t>(n)].y0 - y0).norm(), 1e-13);
  }
}

TEST(LQSolver, RecursiveMatchesDirectFormula) {
  // The recursion and the mild formula differ only at the history seam: one
  // node per step, so O(sqrt dt) in the H-norm and O(dt) after B*.
  std::vector<double> control_gaps;
  for (double dt : {0.02, 0.01, 0.005}) {
    const Problem p(fixtures::coarse_fixture(dt).model(), fixture_config().lq);
    const auto sol = solve(p);
    SolverOptions direct;
    direct.scheme = AdjointScheme::direct;
    const auto ref = solve(p, direct);
    for (Index n = 0; n <= sol.time_steps; ++n) {
      const auto& a = sol.a[static_cast<std::size_t>(n)];
      const auto check = compute_a_direct(p.ops, p.lq, p.model.r, sol.time_steps, n);
      EXPECT_LE(sup_gap(check, ref.a[static_cast<std::size_t>(n)]), 1e-13);
      EXPECT_LE((a.y0 - check.y0).norm(), 1e-12);
      EXPECT_LE(norm(a - check, dt), 2 * std::sqrt(dt));
    }
    const double gap = (sol.u_star - ref.u_star).cwiseAbs().maxCoeff();
    EXPECT_LE(gap, dt);
    control_gaps.push_back(gap);
  }
  EXPECT_NEAR(control_gaps[0] / control_gaps[1], 2.0, 0.6);
  EXPECT_NEAR(control_gaps[1] / control_gaps[2], 2.0, 0.6);
}

TEST(LQSolver, OptimalControlFormula) {
  const LQParams<double> lq{0, 0, 0.1, 0.05, 0.5, 0.5, 0, 0};
  EXPECT_DOUBLE_EQ(optimal_control<double>(lq, {0.1, 0.05}), 0.0);
  EXPECT_DOUBLE_EQ(optimal_control<double>(lq, {1.1, 1.05}), 1.0);
}

TEST(LQSolver, ZeroStateRewardGivesConstantControl) {
  RunConfig c = fixtures::coarse_fixture();
  c.lq.alpha0 = c.lq.alpha1 = c.lq.lambda0 = c.lq.lambda1 = 0;
  const Problem p(c.model(), c.lq);
  const auto sol = solve(p);
  const double expected = -(c.lq.beta0 + c.lq.beta1) / (2 * c.lq.gamma_sum());
  EXPECT_LE((sol.u_star.array() - expected).abs().maxCoeff(), 1e-15);
  EXPECT_EQ(sol.q.cwiseAbs().maxCoeff(), 0.0);
  const auto orig = solve_original(sol, p.ops, 0, 0.7, p.model.delta);
  EXPECT_DOUBLE_EQ(orig.value, sol.b(0));
}

TEST(LQSolver, NoControlEffectMeansZeroAdjointProjection) {
  RunConfig c = fixtures::coarse_fixture();
  c.b0 = 0;
  c.b1.preset = "zero";
  const Problem p(c.model(), c.lq);
  EXPECT_EQ(solve(p).q.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LQSolver, BVanishesWhenQEqualsBeta) {
  RunConfig c = fixtures::coarse_fixture();
  c.b0 = 0;
  c.b1.preset = "zero";
  c.lq.beta0 = c.lq.beta1 = 0;
  const Problem p(c.model(), c.lq);
  EXPECT_EQ(solve(p).b.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LQSolver, ValueFunctionSpecialPoints) {
  const Problem p(fixtures::coarse_fixture().model(), fixture_config().lq);
  const auto sol = solve(p);
  HilbertPoint<double> y = p.ops.zero();
  EXPECT_EQ(value_function(sol, 5, y), sol.b(5));
  y.y0 << 0.3, 0.8;
  EXPECT_DOUBLE_EQ(value_function(sol, sol.time_steps, y), p.lq.lambda0 * 0.3 - p.lq.lambda1 * 0.8);
}

TEST(LQSolver, ControlIgnoresInitialGoodwill) {
  const Problem p(fixtures::coarse_fixture().model(), fixture_config().lq);
  const auto sol = solve(p);
  const auto one = solve_original(sol, p.ops, 10, 0.1, p.model.delta);
  const auto two = solve_original(sol, p.ops, 10, 5.0, p.model.delta);
  EXPECT_EQ(one.control, two.control);
  EXPECT_EQ(one.control.size(), sol.time_steps - 9);
  EXPECT_NE(one.value, two.value);
}

TEST(LQSolver, SigmaDoesNotEnter) {
  RunConfig c = fixtures::coarse_fixture();
  const Problem base(c.model(), c.lq);
  const auto ref = solve(base);
  for (double sigma : {0.0, 1.0, 4.0}) {
    c.sigma = sigma;
    const Problem p(c.model(), c.lq);
    const auto sol = solve(p);
    EXPECT_EQ(sol.u_star, ref.u_star);
    EXPECT_EQ(sol.b, ref.b);
    EXPECT_EQ(sol.value_at_start, ref.value_at_start);
  }
}

TEST(LQSolver, BResidualIsFirstOrder) {
  std::vector<double> res;
  for (double dt : {0.01, 0.005}) {
    const Problem p(fixtures::coarse_fixture(dt).model(), fixture_config().lq);
    const auto r = b_ode_residual(solve(p), p.lq, p.model.r);
    EXPECT_NEAR(r.ratio, 1.0, 0.05);
    res.push_back(r.max_abs);
  }
  EXPECT_NEAR(res[0] / res[1], 2.0, 0.6);
}

TEST(LQSolver, HalvedVariantBreaksTheODE) {
  const Problem p(fixtures::coarse_fixture().model(), fixture_config().lq);
  SolverOptions halved;
  halved.b_variant = BVariant::halved;
  const auto good = solve(p);
  const auto bad = solve(p, halved);
  EXPECT_EQ(bad.u_star, good.u_star);
  const auto r = b_ode_residual(bad, p.lq, p.model.r);
  EXPECT_NEAR(r.ratio, 0.5, 0.05);
  EXPECT_GT(r.max_abs, 10 * b_ode_residual(good, p.lq, p.model.r).max_abs);
}

TEST(LQSolver, LongDoubleMatchesDouble) {
  const RunConfig c = fixtures::coarse_fixture(0.02);
  const ModelParams<double> m = c.model();
  ModelParams<long double> ml;
  ml.a0 = m.a0;
  ml.a1 = m.a1;
  ml.b0 = m.b0;
  ml.sigma = m.sigma;
  ml.d = m.d;
  ml.T = m.T;
  ml.r = m.r;
  ml.x0 = m.x0;
  ml.dt = m.dt;
  ml.b1 = m.b1.cast<long double>();
  ml.delta = m.delta.cast<long double>();
  const LQParams<double>& lq = c.lq;
  const LQParams<long double> lql{lq.alpha0, lq.alpha1, lq.beta0,   lq.beta1,
                                  lq.gamma0, lq.gamma1, lq.lambda0, lq.lambda1};
  const LiftedOperators<long double> opsl(ml);
  const LiftedOperators<double> ops(m);
  const auto sl = solve_lq(opsl, ml, lql, SolverOptions{});
  const auto sd = solve_lq(ops, m, lq, SolverOptions{});
  EXPECT_NEAR(static_cast<double>(sl.value_at_start), sd.value_at_start, 1e-12);
  EXPECT_LE((sl.u_star.cast<double>() - sd.u_star).cwiseAbs().maxCoeff(), 1e-12);
}
