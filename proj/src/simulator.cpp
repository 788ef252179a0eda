#include "mfadv/simulator.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace mfadv {

ControlPath::ControlPath(Eigen::VectorXd history, Eigen::MatrixXd values, bool deterministic)
    : history_(std::move(history)), values_(std::move(values)), deterministic_(deterministic) {
  if (history_.size() < 1) throw std::invalid_argument("control history needs at least one sample");
  if (values_.rows() < 1 || values_.cols() < 1) throw std::invalid_argument("control has no values");
  if (!history_.allFinite() || !values_.allFinite()) throw std::invalid_argument("control must be finite");
}

ControlPath ControlPath::deterministic(Eigen::VectorXd history, Eigen::VectorXd values) {
  Eigen::MatrixXd row = values.transpose();
  return ControlPath(std::move(history), std::move(row), true);
}

ControlPath ControlPath::stochastic(Eigen::VectorXd history, Eigen::MatrixXd values) {
  return ControlPath(std::move(history), std::move(values), false);
}

ControlPath ControlPath::constant(Eigen::VectorXd history, Index nodes, double c) {
  return deterministic(std::move(history), Eigen::VectorXd::Constant(nodes, c));
}

ControlPath ControlPath::mean() const {
  if (deterministic_) return *this;
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(nodes());
  for (Index r = 0; r < rows(); ++r) avg += values_.row(r).transpose();
  avg /= static_cast<double>(rows());
  return deterministic(history_, std::move(avg));
}

ControlPath ControlPath::shifted(double c) const {
  ControlPath out = *this;
  out.values_.array() += c;
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

NoiseBatch brownian_increments(Index n_paths, Index steps, double dt, std::uint64_t seed) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  if (steps < 0) throw std::invalid_argument("negative step count");
  if (!(dt > 0)) throw std::invalid_argument("dt must be > 0");
  NoiseBatch out;
  out.dt = dt;
  out.seed = seed;
  out.increments.resize(n_paths, steps);
  const double scale = std::sqrt(dt);
  for (Index i = 0; i < n_paths; ++i) {
    std::mt19937_64 rng(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> normal;
    for (Index k = 0; k < steps; ++k) out.increments(i, k) = scale * normal(rng);
  }
  return out;
}

NoiseBatch coarsen(const NoiseBatch& fine, Index factor) {
  if (factor < 1 || fine.steps() % factor != 0) {
    throw std::invalid_argument("coarsening factor must divide the step count");
  }
  NoiseBatch out;
  out.dt = fine.dt * static_cast<double>(factor);
  out.seed = fine.seed;
  out.increments.resize(fine.paths(), fine.steps() / factor);
  for (Index k = 0; k < out.steps(); ++k) {
    out.increments.col(k) = fine.increments.middleCols(k * factor, factor).rowwise().sum();
  }
  return out;
}

Estimate summarize(const Eigen::VectorXd& samples) {
  Estimate e;
  e.n = samples.size();
  if (e.n == 0) return e;
  double sum = 0;
  for (Index i = 0; i < e.n; ++i) sum += samples(i);
  e.mean = sum / static_cast<double>(e.n);
  if (e.n > 1) {
    double ss = 0;
    for (Index i = 0; i < e.n; ++i) ss += (samples(i) - e.mean) * (samples(i) - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  }
  return e;
}

namespace {

Index run_steps(const Problem& problem, Index start) {
  const Index N = problem.time_steps();
  if (start < 0 || start > N) throw std::invalid_argument("start node outside the time grid");
  return N - start;
}

void check_control(const Problem& problem, Index steps, const ControlPath& c, const char* name) {
  if (c.nodes() != steps + 1) {
    throw std::invalid_argument(std::string(name) + " must have " + std::to_string(steps + 1) +
                                " nodes on [t0, T]");
  }
  if (c.delay_steps() != problem.delay_steps()) {
    throw std::invalid_argument(std::string(name) + " history does not match the delay grid");
  }
}

void check_noise(const Problem& problem, Index steps, const NoiseBatch& noise) {
  if (noise.steps() != steps) throw std::invalid_argument("noise step count does not match the run");
  if (std::abs(noise.dt - problem.dt()) > 1e-12 * problem.dt()) {
    throw std::invalid_argument("noise grid step does not match the model");
  }
}

void check_rows(const ControlPath& c, const NoiseBatch& noise, const char* name) {
  if (!c.is_deterministic() && c.rows() != noise.paths()) {
    throw std::invalid_argument(std::string(name) + " must have one row per path");
  }
}

/// int b1(xi) c(s_k + xi) dxi by trapezoid over the delay grid.
double delay_integral(const Problem& problem, const ControlPath& c, Index row, Index k) {
  const Index n = problem.delay_steps();
  const Eigen::VectorXd& b1 = problem.model.b1;
  double acc = 0;
  for (Index j = 0; j <= n; ++j) {
    acc += trapezoid_weight<double>(j, n) * b1(n - j) * c.delayed(row, k, j);
  }
  return acc * problem.dt();
}

Eigen::VectorXd delay_integrals(const Problem& problem, const ControlPath& c, Index row) {
  Eigen::VectorXd out(c.nodes());
  for (Index k = 0; k < c.nodes(); ++k) out(k) = delay_integral(problem, c, row, k);
  return out;
}

double discount(const Problem& problem, Index k) {
  return std::exp(-problem.model.r * static_cast<double>(k) * problem.dt());
}

}  // namespace

Eigen::VectorXd solve_odde(const Problem& problem, Index start, double m0, const ControlPath& z) {
  const Index L = run_steps(problem, start);
  check_control(problem, L, z, "z");
  if (!z.is_deterministic()) throw std::invalid_argument("the ODDE needs a deterministic control");
  const auto& p = problem.model;
  const double dt = p.dt;
  const Eigen::VectorXd D = delay_integrals(problem, z, 0);
  Eigen::VectorXd M(L + 1);
  M(0) = m0;
  for (Index k = 0; k < L; ++k) {
    M(k + 1) = M(k) + dt * ((p.a0 + p.a1) * M(k) + p.b0 * z.value(0, k) + D(k));
  }
  return M;
}

SimBatch simulate_mean_field_sdde(const Problem& problem, Index start, double x0,
                                  const ControlPath& u, const NoiseBatch& noise) {
  const Index L = run_steps(problem, start);
  check_control(problem, L, u, "u");
  check_noise(problem, L, noise);
  check_rows(u, noise, "u");
  const Index P = noise.paths();
  if (!u.is_deterministic() && P < 2) {
    throw std::invalid_argument("a stochastic control needs at least 2 paths for the particle mean");
  }
  const auto& p = problem.model;
  const double dt = p.dt;

  SimBatch batch;
  batch.start = start;
  batch.dt = dt;
  batch.seed = noise.seed;
  batch.x.resize(P, L + 1);
  batch.x.col(0).setConstant(x0);

  if (u.is_deterministic()) {
    batch.m = solve_odde(problem, start, x0, u);
    const Eigen::VectorXd D = delay_integrals(problem, u, 0);
    for (Index k = 0; k < L; ++k) {
      const double forcing = p.a1 * batch.m(k) + p.b0 * u.value(0, k) + D(k);
      batch.x.col(k + 1) = batch.x.col(k) + dt * (p.a0 * batch.x.col(k).array() + forcing).matrix() +
                           p.sigma * noise.increments.col(k);
    }
    return batch;
  }

  batch.m.resize(L + 1);
  for (Index k = 0; k <= L; ++k) {
    double sum = 0;
    for (Index i = 0; i < P; ++i) sum += batch.x(i, k);
    batch.m(k) = sum / static_cast<double>(P);
    if (k == L) break;
    for (Index i = 0; i < P; ++i) {
      const double drift = p.a0 * batch.x(i, k) + p.a1 * batch.m(k) + p.b0 * u.value(i, k) +
                           delay_integral(problem, u, i, k);
      batch.x(i, k + 1) = batch.x(i, k) + dt * drift + p.sigma * noise.increments(i, k);
    }
  }
  return batch;
}

SimBatch simulate_coupled(const Problem& problem, Index start, const Eigen::Vector2d& x0,
                          const ControlPath& u, const ControlPath& z, const NoiseBatch& noise) {
  const Index L = run_steps(problem, start);
  check_control(problem, L, u, "u");
  check_control(problem, L, z, "z");
  check_noise(problem, L, noise);
  check_rows(u, noise, "u");
  if (!z.is_deterministic()) throw std::invalid_argument("z must be deterministic");
  const auto& p = problem.model;
  const double dt = p.dt;
  const Index P = noise.paths();

  SimBatch batch;
  batch.start = start;
  batch.dt = dt;
  batch.seed = noise.seed;
  batch.x.resize(P, L + 1);
  batch.m.resize(L + 1);
  batch.x.col(0).setConstant(x0(0));
  batch.m(0) = x0(1);

  // The second coordinate sees only z and carries no noise.
  const Eigen::VectorXd Dz = delay_integrals(problem, z, 0);
  for (Index k = 0; k < L; ++k) {
    batch.m(k + 1) = batch.m(k) + dt * ((p.a0 + p.a1) * batch.m(k) + p.b0 * z.value(0, k) + Dz(k));
  }

  const Eigen::VectorXd Du = u.is_deterministic() ? delay_integrals(problem, u, 0) : Eigen::VectorXd();
  for (Index i = 0; i < P; ++i) {
    for (Index k = 0; k < L; ++k) {
      const double du = u.is_deterministic() ? Du(k) : delay_integral(problem, u, i, k);
      const double drift = p.a0 * batch.x(i, k) + p.a1 * batch.m(k) + p.b0 * u.value(i, k) + du;
      batch.x(i, k + 1) = batch.x(i, k) + dt * drift + p.sigma * noise.increments(i, k);
    }
  }
  return batch;
}

namespace {

/// First component of e^{m dt A} B, one column per control coordinate.
std::vector<Eigen::Matrix2d> control_kernel(const Problem& problem, Index L) {
  const auto& ops = problem.ops;
  std::vector<Eigen::Matrix2d> K(static_cast<std::size_t>(L + 1));
  const HilbertPoint<double> Be1 = apply_control_operator<double>(ops, Eigen::Vector2d(1, 0));
  const HilbertPoint<double> Be2 = apply_control_operator<double>(ops, Eigen::Vector2d(0, 1));
  for (Index m = 0; m <= L; ++m) {
    K[static_cast<std::size_t>(m)].col(0) = apply_semigroup(ops, m, Be1).y0;
    K[static_cast<std::size_t>(m)].col(1) = apply_semigroup(ops, m, Be2).y0;
  }
  return K;
}

HilbertPoint<double> full_point(const Problem& problem, const HilbertPoint<double>& y,
                                const ControlPath& u, const ControlPath& z,
                                const NoiseBatch& noise, Index path, Index node) {
  const auto& ops = problem.ops;
  const double dt = problem.dt();
  HilbertPoint<double> out = apply_semigroup(ops, node, y);
  for (Index j = 0; j <= node; ++j) {
    const double w = trapezoid_weight<double>(j, node) * dt;
    if (w == 0) continue;
    const Eigen::Vector2d ut(u.value(path, j), z.value(0, j));
    out += w * apply_semigroup(ops, node - j, apply_control_operator<double>(ops, ut));
  }
  for (Index k = 0; k < node; ++k) {
    out += apply_semigroup(ops, node - k, apply_noise_operator(ops, noise.increments(path, k)));
  }
  return out;
}

}  // namespace

SimBatch simulate_lifted(const Problem& problem, Index start, const HilbertPoint<double>& y,
                         const ControlPath& u, const ControlPath& z, const NoiseBatch& noise,
                         const SnapshotRequest& snapshots) {
  const Index L = run_steps(problem, start);
  check_control(problem, L, u, "u");
  check_control(problem, L, z, "z");
  check_noise(problem, L, noise);
  check_rows(u, noise, "u");
  if (!z.is_deterministic()) throw std::invalid_argument("z must be deterministic");
  if (y.delay_steps() != problem.delay_steps()) {
    throw std::invalid_argument("initial point does not match the delay grid");
  }
  const auto& ops = problem.ops;
  const double dt = problem.dt();
  const Index P = noise.paths();

  SimBatch batch;
  batch.start = start;
  batch.dt = dt;
  batch.seed = noise.seed;
  batch.x.resize(P, L + 1);
  batch.m.resize(L + 1);

  const std::vector<Eigen::Matrix2d> K = control_kernel(problem, L);
  auto kernel = [&](Index m) -> const Eigen::Matrix2d& { return K[static_cast<std::size_t>(m)]; };

  // Shared part: free evolution of y plus the convolution of z (and of u when deterministic).
  Samples2<double> shared(2, L + 1);
  for (Index k = 0; k <= L; ++k) {
    Eigen::Vector2d acc = apply_semigroup(ops, k, y).y0;
    for (Index j = 0; j <= k; ++j) {
      const double w = trapezoid_weight<double>(j, k) * dt;
      if (w == 0) continue;
      acc.noalias() += w * kernel(k - j).col(1) * z.value(0, j);
      if (u.is_deterministic()) acc.noalias() += w * kernel(k - j).col(0) * u.value(0, j);
    }
    shared.col(k) = acc;
  }
  batch.m = shared.row(1).transpose();

  const Eigen::Matrix2d E1 = ops.exp_A0(1);
  const double sigma = ops.sigma();
  Eigen::VectorXd conv(L + 1);
  for (Index i = 0; i < P; ++i) {
    if (!u.is_deterministic()) {
      for (Index k = 0; k <= L; ++k) {
        double acc = 0;
        for (Index j = 0; j <= k; ++j) {
          acc += trapezoid_weight<double>(j, k) * kernel(k - j)(0, 0) * u.value(i, j);
        }
        conv(k) = acc * dt;
      }
    }
    // S_{k+1} = e^{dt A0} (S_k + (sigma dW_k, 0)); its second coordinate stays 0.
    Eigen::Vector2d S = Eigen::Vector2d::Zero();
    for (Index k = 0; k <= L; ++k) {
      if (k > 0) S = E1 * (S + Eigen::Vector2d(sigma * noise.increments(i, k - 1), 0));
      batch.x(i, k) = shared(0, k) + S(0) + (u.is_deterministic() ? 0.0 : conv(k));
    }
  }

  for (Index path : snapshots.paths) {
    if (path < 0 || path >= P) throw std::invalid_argument("snapshot path out of range");
    for (Index node : snapshots.nodes) {
      if (node < 0 || node > L) throw std::invalid_argument("snapshot node out of range");
      batch.snapshots.push_back({path, node, full_point(problem, y, u, z, noise, path, node)});
    }
  }
  return batch;
}

Eigen::VectorXd path_objectives(const Problem& problem, const SimBatch& batch, const ControlPath& u) {
  const ControlPath ubar = u.mean();
  return lifted_path_objectives(problem, batch, u, ubar);
}

Eigen::VectorXd lifted_path_objectives(const Problem& problem, const SimBatch& batch,
                                       const ControlPath& u, const ControlPath& z) {
  const Index L = batch.nodes() - 1;
  if (u.nodes() != L + 1 || z.nodes() != L + 1) {
    throw std::invalid_argument("control length does not match the batch");
  }
  if (!u.is_deterministic() && u.rows() != batch.paths()) {
    throw std::invalid_argument("u must have one row per path");
  }
  const auto& lq = problem.lq;
  const double dt = problem.dt();
  Eigen::VectorXd weights(L + 1);
  for (Index k = 0; k <= L; ++k) weights(k) = trapezoid_weight<double>(k, L) * dt * discount(problem, k);
  const double terminal_discount = discount(problem, L);

  Eigen::VectorXd out(batch.paths());
  for (Index i = 0; i < batch.paths(); ++i) {
    double acc = 0;
    for (Index k = 0; k <= L; ++k) {
      if (weights(k) == 0) continue;
      const double t = static_cast<double>(batch.start + k) * dt;
      acc += weights(k) * running_reward<double>(lq, t, Eigen::Vector2d(batch.x(i, k), batch.m(k)),
                                                 Eigen::Vector2d(u.value(i, k), z.value(0, k)));
    }
    acc += terminal_discount * terminal_reward<double>(lq, Eigen::Vector2d(batch.x(i, L), batch.m(L)));
    out(i) = acc;
  }
  return out;
}

Estimate estimate_J(const Problem& problem, Index start, double x0, const ControlPath& u,
                    const NoiseBatch& noise) {
  const SimBatch batch = simulate_mean_field_sdde(problem, start, x0, u, noise);
  return summarize(path_objectives(problem, batch, u));
}

Estimate estimate_J_lifted(const Problem& problem, Index start, const HilbertPoint<double>& y,
                           const ControlPath& u, const ControlPath& z, const NoiseBatch& noise) {
  const SimBatch batch = simulate_lifted(problem, start, y, u, z, noise);
  return summarize(lifted_path_objectives(problem, batch, u, z));
}

ControlPath control_from_solution(const Problem& problem, const Eigen::VectorXd& values) {
  return ControlPath::deterministic(problem.model.delta, values);
}

}  // namespace mfadv
