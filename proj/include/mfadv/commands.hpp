#pragma once

// Subcommand bodies behind the mfadv executable. Each writes its files into
// `out` and returns the JSON summary it wrote.

#include "mfadv/config.hpp"
#include "mfadv/verification.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfadv {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config_error = 2,
  exit_verification_failed = 3,
  exit_input_error = 4,
};

/// Bad command input other than the config itself, e.g. a missing control file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ControlSpec {
  enum class Kind { optimal, constant, file } kind = Kind::optimal;
  double constant = 0;
  std::filesystem::path file;
};

/// "optimal", "constant:C" or "file:PATH".
ControlSpec parse_control_spec(const std::string& text);

nlohmann::json cmd_solve(const RunConfig& config, const std::filesystem::path& out);
nlohmann::json cmd_simulate(const RunConfig& config, const ControlSpec& control,
                            const std::filesystem::path& out);

struct VerifyOutcome {
  nlohmann::json report;
  bool pass = false;
};

VerifyOutcome cmd_verify(const RunConfig& config, const std::filesystem::path& out);
nlohmann::json cmd_sweep(const RunConfig& config, const std::string& parameter,
                         const std::vector<double>& values, const std::filesystem::path& out);

}  // namespace mfadv
