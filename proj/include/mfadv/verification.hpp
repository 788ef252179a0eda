#pragma once

// Named checks bundling the oracles into pass/fail results. Each group
// rebuilds what it needs from the run configuration, so groups can be run
// on their own.

#include "mfadv/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mfadv {

struct CheckResult {
  std::string name;
  std::uint64_t inputs_hash = 0;
  double left = 0;
  double right = 0;
  double tolerance = 0;
  bool pass = false;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const CheckResult& check);

bool all_pass(const std::vector<CheckResult>& checks);

std::vector<CheckResult> verify_terminal(const RunConfig& config);
std::vector<CheckResult> verify_brute_force(const RunConfig& config);
std::vector<CheckResult> verify_value_consistency(const RunConfig& config);
std::vector<CheckResult> verify_fundamental_identity(const RunConfig& config);
std::vector<CheckResult> verify_jensen(const RunConfig& config);
std::vector<CheckResult> verify_lift_equivalence(const RunConfig& config);
std::vector<CheckResult> verify_operator_algebra(const RunConfig& config, Index points = 100);
std::vector<CheckResult> verify_sigma_invariance(const RunConfig& config,
                                                 const std::vector<double>& sigmas = {0.0, 0.3, 1.0});

/// First-order decay of the weak adjoint residual over the given grid steps (coarse to fine).
std::vector<CheckResult> verify_adjoint_residual(const RunConfig& config, const std::vector<double>& dts);

/// Decay rate of the b residual under one refinement, and the fitted ratio against the ODE.
std::vector<CheckResult> verify_b_residual(const RunConfig& config);

/// Every group above, on the configured grid and its refinement.
std::vector<CheckResult> verify_all(const RunConfig& config);

/// Least-squares slope of log(values) against log(steps).
double log_log_slope(const std::vector<double>& steps, const std::vector<double>& values);

}  // namespace mfadv
