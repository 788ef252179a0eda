#pragma once

// Run configuration: a single JSON document with sections model, lq, grid,
// monte_carlo, oracle, solver and output. Unknown keys are errors.

#include "mfadv/hilbert.hpp"
#include "mfadv/lq_solver.hpp"
#include "mfadv/model.hpp"
#include "mfadv/problem.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfadv {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> messages);
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

/// A function on [-d, 0]: a preset that is resampled when dt changes, or raw samples.
struct KernelSpec {
  std::string preset = "zero";  // zero | uniform | exponential | samples
  double scale = 1.0;
  double rate = 1.0;
  double value = 0.0;
  std::vector<double> samples;

  Eigen::VectorXd sample(double d, double dt) const;
};

struct RunConfig {
  double a0 = 0, a1 = 0, b0 = 0, sigma = 0, d = 1, T = 1, r = 0, x0 = 0;
  KernelSpec b1;
  KernelSpec delta;
  LQParams<double> lq;

  double dt = 0.01;
  Index refinement = 2;

  Index n_paths = 1000;
  std::uint64_t seed = 1;

  Index pieces = 50;
  Index jensen_trials = 100;
  Index jensen_paths = 2000;
  Index random_controls = 10;
  Index identity_controls = 20;

  SolverOptions solver;
  SeamRule seam = SeamRule::left_limit;

  std::string out_dir;
  std::vector<std::string> formats{"csv", "json"};
  Index max_trajectory_paths = 10;

  /// Model data on the configured grid; kernels are sampled here.
  ModelParams<double> model() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Sets a numeric entry by dotted path, e.g. "model.sigma" or "lq.gamma0".
void set_parameter(RunConfig& config, const std::string& dotted, double value);

/// Validated problem; constraint violations surface as ConfigError.
Problem make_problem(const RunConfig& config);

/// The fixture used by the acceptance suite and the example config.
RunConfig fixture_config();

}  // namespace mfadv
