#pragma once

// Monte Carlo simulation of the goodwill SDDE, its mean ODDE, the coupled
// two-dimensional system and the lifted H-valued state, with estimators of
// the discounted objectives.
//
// Time nodes of a run started at grid node `start` are s_k = (start + k) dt,
// k = 0..L with L = N - start. Noise increments are indexed the same way.

#include "mfadv/hilbert.hpp"
#include "mfadv/problem.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace mfadv {

/// Control on [t0 - d, T]: the history delta on [t0 - d, t0] plus one row per
/// sample on [t0, T]. A single row is a deterministic control.
class ControlPath {
 public:
  ControlPath() = default;
  static ControlPath deterministic(Eigen::VectorXd history, Eigen::VectorXd values);
  static ControlPath stochastic(Eigen::VectorXd history, Eigen::MatrixXd values);
  static ControlPath constant(Eigen::VectorXd history, Index nodes, double c);

  bool is_deterministic() const { return deterministic_; }
  Index rows() const { return values_.rows(); }
  Index nodes() const { return values_.cols(); }
  Index delay_steps() const { return history_.size() - 1; }

  /// Value at node k >= 0 of row `row` (row is ignored for deterministic paths).
  double value(Index row, Index k) const { return values_(deterministic_ ? 0 : row, k); }

  /// Value at s_k - lag*dt; nodes at or before t0 read the history.
  double delayed(Index row, Index k, Index lag) const {
    const Index idx = k - lag;
    if (idx > 0) return value(row, idx);
    return history_(delay_steps() + idx);
  }

  /// Pointwise average over rows, as a deterministic path with the same history.
  ControlPath mean() const;
  ControlPath shifted(double c) const;

  const Eigen::VectorXd& history() const { return history_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::VectorXd row(Index r) const { return values_.row(deterministic_ ? 0 : r).transpose(); }

 private:
  ControlPath(Eigen::VectorXd history, Eigen::MatrixXd values, bool deterministic);
  Eigen::VectorXd history_;
  Eigen::MatrixXd values_;  // rows x nodes
  bool deterministic_ = true;
};

/// Brownian increments, one row per path and one column per grid step.
struct NoiseBatch {
  Eigen::MatrixXd increments;
  double dt = 0;
  std::uint64_t seed = 0;

  Index paths() const { return increments.rows(); }
  Index steps() const { return increments.cols(); }
};

std::uint64_t splitmix64(std::uint64_t x);

/// Path i draws from its own stream keyed by (seed, i), so any subset of
/// paths is reproducible on its own.
NoiseBatch brownian_increments(Index n_paths, Index steps, double dt, std::uint64_t seed);

/// Sums groups of `factor` consecutive increments: the same Brownian paths on a coarser grid.
NoiseBatch coarsen(const NoiseBatch& fine, Index factor);

struct Estimate {
  double mean = 0;
  double std_error = 0;
  Index n = 0;
};

/// Sample mean and standard error (sample std / sqrt(n)), summed in index order.
Estimate summarize(const Eigen::VectorXd& samples);

struct LiftedSnapshot {
  Index path = 0;
  Index node = 0;
  HilbertPoint<double> y;
};

struct SimBatch {
  Index start = 0;
  double dt = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd x;  // paths x nodes: X, or the first coordinate of X~ or Y0
  Eigen::VectorXd m;  // nodes: the mean path used for E[X], or the second coordinate
  std::vector<LiftedSnapshot> snapshots;

  Index paths() const { return x.rows(); }
  Index nodes() const { return x.cols(); }
};

/// Euler scheme for dM = ((a0 + a1) M + b0 z + int b1(xi) z(s + xi) dxi) ds.
Eigen::VectorXd solve_odde(const Problem& problem, Index start, double m0, const ControlPath& z);

/// Euler-Maruyama for the mean-field SDDE. E[X] is the ODDE mean when u is
/// deterministic and the particle average when u is stochastic.
SimBatch simulate_mean_field_sdde(const Problem& problem, Index start, double x0,
                                  const ControlPath& u, const NoiseBatch& noise);

/// Euler-Maruyama for the coupled system driven by (u, z); z must be deterministic.
SimBatch simulate_coupled(const Problem& problem, Index start, const Eigen::Vector2d& x0,
                          const ControlPath& u, const ControlPath& z, const NoiseBatch& noise);

struct SnapshotRequest {
  std::vector<Index> nodes;
  std::vector<Index> paths;
};

/// Mild solution of the lifted equation on the grid. Only Y0 is stored per
/// path; full points are rebuilt for the requested (path, node) pairs.
SimBatch simulate_lifted(const Problem& problem, Index start, const HilbertPoint<double>& y,
                         const ControlPath& u, const ControlPath& z, const NoiseBatch& noise,
                         const SnapshotRequest& snapshots = {});

/// Per-path discounted objective of a mean-field batch driven by u.
Eigen::VectorXd path_objectives(const Problem& problem, const SimBatch& batch, const ControlPath& u);

/// Per-path discounted objective of a lifted (or coupled) batch driven by (u, z).
Eigen::VectorXd lifted_path_objectives(const Problem& problem, const SimBatch& batch,
                                       const ControlPath& u, const ControlPath& z);

Estimate estimate_J(const Problem& problem, Index start, double x0, const ControlPath& u,
                    const NoiseBatch& noise);

Estimate estimate_J_lifted(const Problem& problem, Index start, const HilbertPoint<double>& y,
                           const ControlPath& u, const ControlPath& z, const NoiseBatch& noise);

/// A deterministic control path with history delta from values on nodes start..N.
ControlPath control_from_solution(const Problem& problem, const Eigen::VectorXd& values);

}  // namespace mfadv
