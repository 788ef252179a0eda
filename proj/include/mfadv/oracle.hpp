#pragma once

// Independent checks of the LQ solution: Hamiltonian algebra, a brute-force
// optimizer over piecewise-constant deterministic controls, the fundamental
// identity, Jensen dominance of deterministic controls, residuals of the
// equations for a and b, and the algebra of the lifted operators.

#include "mfadv/hilbert.hpp"
#include "mfadv/lq_solver.hpp"
#include "mfadv/problem.hpp"
#include "mfadv/simulator.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace mfadv {

/// f(t, y0, (u,u)) + <(u,u), q>.
double hamiltonian_cv(const LQParams<double>& lq, const Eigen::Vector2d& y0, double u,
                      const Eigen::Vector2d& q);

/// sup over the diagonal of hamiltonian_cv, in closed form.
double hamiltonian(const LQParams<double>& lq, const Eigen::Vector2d& y0, const Eigen::Vector2d& q);

/// Argmax of f over lo, lo + step, ..., hi by exhaustive evaluation.
double scan_argmax(const std::function<double(double)>& f, double lo, double hi, double step);

/// exp(M) by Taylor series with scaling and squaring; independent of the closed form.
Eigen::Matrix2d expm_scaling_squaring(const Eigen::Matrix2d& M);

/// Piecewise-constant control on [t0, T]. Piece k covers nodes knots[k] .. knots[k+1]-1;
/// the last piece also owns the final node.
struct ControlGrid {
  std::vector<Index> knots;  // pieces + 1 node offsets, knots[0] = 0, knots.back() = L
  Eigen::VectorXd coefficients;

  Index pieces() const { return static_cast<Index>(knots.size()) - 1; }
  Index piece_of(Index node) const;
  Eigen::VectorXd expand() const;  // values on nodes 0..L
};

ControlGrid make_control_grid(Index steps, Index pieces);

/// Noiseless objective of a deterministic control u = z: the mean path M
/// from the ODDE stands in for both X and E[X]. The running reward uses the
/// left-point rule that matches the Euler step of the ODDE.
double deterministic_objective(const Problem& problem, Index start, double x0, const ControlPath& u);

enum class Assembly {
  sensitivity,        // exact propagation of per-piece responses through the ODDE
  finite_difference,  // central differences of the objective
};

struct BruteForceResult {
  ControlGrid grid;
  double value = 0;
  double condition = 0;
  Eigen::VectorXd gradient_at_zero;
  Eigen::MatrixXd hessian;  // of -J, positive definite
};

/// Maximizes the deterministic objective over K-piece controls. Throws
/// std::runtime_error when the system's condition number exceeds 1e12.
BruteForceResult brute_force_deterministic(const Problem& problem, Index start, double x0,
                                           const Eigen::VectorXd& delta, Index pieces,
                                           Assembly assembly = Assembly::sensitivity);

struct IdentityReport {
  double left = 0;            // v(t0, y)
  double right = 0;           // objective + gap integral, path average
  double right_std_error = 0;
  double objective = 0;
  double objective_std_error = 0;
  double gap_integral = 0;
  double gap_std_error = 0;
  double min_gap_integrand = 0;
  bool pass = false;
};

/// Both sides of v(t, y) = J(t, y; u) + E int e^{-r(s-t)} (H0 - H_CV) ds along
/// simulated lifted paths with z = u.
IdentityReport check_fundamental_identity(const Problem& problem, const LQSolution<double>& sol,
                                          Index start, const HilbertPoint<double>& y,
                                          const ControlPath& u, const NoiseBatch& noise);

struct JensenReport {
  double lhs = 0, lhs_std_error = 0;  // objective under (u, E[u])
  double rhs = 0, rhs_std_error = 0;  // objective under (E[u], E[u])
  double combined_std_error = 0;
  double mean_gap = 0;                // sup over nodes of |E Y0 - E Y0_E|
  double mean_gap_tolerance = 0;
  bool dominance = false;
  bool mean_identity = false;

  bool pass() const { return dominance && mean_identity; }
};

JensenReport check_jensen_dominance(const Problem& problem, Index start, const HilbertPoint<double>& y,
                                    const ControlPath& u, const NoiseBatch& noise);

struct BResidual {
  double max_abs = 0;  // sup over interior nodes of |b' + h - r b| by forward differences
  double ratio = 0;    // least-squares fit of (r b - b') against h; 1 solves the ODE
};

BResidual b_ode_residual(const LQSolution<double>& sol, const LQParams<double>& lq, double r);

/// y in D(A) with its image under the generator (A0 y0 + y1(0), -y1').
struct WeakTestPoint {
  HilbertPoint<double> y;
  HilbertPoint<double> Ay;
};

std::vector<WeakTestPoint> weak_test_points(const LiftedOperators<double>& ops, double d);

/// sup over nodes 1..N-2 and test points of
/// |d/dt <a, y> + <a, A y> + <(alpha~, 0), y> - r <a, y>| with central differences.
double adjoint_weak_residual(const LQSolution<double>& sol, const LiftedOperators<double>& ops,
                             const LQParams<double>& lq, double r,
                             const std::vector<WeakTestPoint>& points);

/// Residual against 1e-8 plus a quadrature budget.
struct AlgebraResidual {
  double residual = 0;
  double budget = 0;
  bool pass() const { return residual <= 1e-8 + budget; }
};

/// max over k = 0..steps of the spectral norm of exp(k dt A0).
double exp_norm_bound(const LiftedOperators<double>& ops, Index steps);

/// H-norm gap of e^{(t+s)A} y against e^{tA} e^{sA} y (or the adjoint pair).
AlgebraResidual semigroup_law_residual(const LiftedOperators<double>& ops, const HilbertPoint<double>& y,
                                       Index t_steps, Index s_steps, bool adjoint);

AlgebraResidual adjoint_pairing_residual(const LiftedOperators<double>& ops,
                                         const HilbertPoint<double>& y,
                                         const HilbertPoint<double>& y2, Index t_steps);

AlgebraResidual control_duality_residual(const LiftedOperators<double>& ops, const Eigen::Vector2d& u2,
                                         const HilbertPoint<double>& y);

// Random inputs for the property checks.

HilbertPoint<double> random_point(std::mt19937_64& rng, const LiftedOperators<double>& ops);

/// c0 + c1 sin(pi s / T + p1) + c2 sin(2 pi s / T + p2) sampled on nodes start..N.
Eigen::VectorXd random_smooth_values(std::mt19937_64& rng, const Problem& problem, Index start,
                                     double amplitude = 1.0);

/// Adds adapted noise functionals to a deterministic base: theta1 W(s) +
/// theta2 dW(s - dt)/sqrt(dt) + theta3 sin(W(s)).
ControlPath random_adapted_control(std::mt19937_64& rng, const ControlPath& base, const NoiseBatch& noise);

std::uint64_t fnv1a(std::string_view text);

}  // namespace mfadv
