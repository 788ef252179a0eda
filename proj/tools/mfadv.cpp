// mfadv: batch front-end for the optimal advertising solver.
//
//   mfadv solve    --config run.json [--out DIR] [--dt X]
//   mfadv simulate --config run.json [--control optimal|constant:C|file:PATH] [--seed N] [--paths N]
//   mfadv verify   --config run.json
//   mfadv sweep    --config run.json --param model.sigma --values 0,0.3,1
//
// The output directory is --out, else output.directory from the config, else
// $MFADV_OUT_DIR, else ./mfadv_out.

#include "mfadv/commands.hpp"
#include "mfadv/config.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<long long> paths;
  std::optional<double> dt;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration (JSON)")->required();
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "Monte Carlo seed (overrides the config)");
  cmd->add_option("--paths", c.paths, "Monte Carlo paths (overrides the config)");
  cmd->add_option("--dt", c.dt, "grid step (overrides the config)");
}

mfadv::RunConfig load(const Common& c) {
  std::ifstream in(c.config);
  if (!in) throw mfadv::ConfigError({"cannot read config file " + c.config});
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw mfadv::ConfigError({"malformed JSON in " + c.config + ": " + e.what()});
  }
  if (!doc.is_object()) throw mfadv::ConfigError({"config root must be an object"});
  if (c.seed) doc["monte_carlo"]["seed"] = *c.seed;
  if (c.paths) doc["monte_carlo"]["n_paths"] = *c.paths;
  if (c.dt) doc["grid"]["dt"] = *c.dt;
  return mfadv::parse_config(doc);
}

std::filesystem::path out_dir(const Common& c, const mfadv::RunConfig& config) {
  if (!c.out.empty()) return c.out;
  if (!config.out_dir.empty()) return config.out_dir;
  if (const char* env = std::getenv("MFADV_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "mfadv_out";
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
      throw mfadv::InputError("cannot parse sweep value '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field optimal advertising with carryover delay"};
  app.require_subcommand(1);

  Common common;
  std::string control = "optimal";
  std::string param;
  std::string values;

  auto* solve = app.add_subcommand("solve", "explicit LQ solution: lq_solution.csv and summary.json");
  add_common(solve, common);
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo trajectories and objective estimate");
  add_common(simulate, common);
  simulate->add_option("--control", control, "optimal | constant:C | file:PATH");
  auto* verify = app.add_subcommand("verify", "run the oracle checks; exit 3 if any fails");
  add_common(verify, common);
  auto* sweep = app.add_subcommand("sweep", "repeat solve over a list of parameter values");
  add_common(sweep, common);
  sweep->add_option("--param", param, "dotted parameter name, e.g. model.sigma")->required();
  sweep->add_option("--values", values, "comma-separated values (may be empty)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const mfadv::RunConfig config = load(common);
    const std::filesystem::path out = out_dir(common, config);
    std::filesystem::create_directories(out);
    if (solve->parsed()) {
      std::cout << mfadv::cmd_solve(config, out).dump(2) << "\n";
    } else if (simulate->parsed()) {
      const mfadv::ControlSpec spec = mfadv::parse_control_spec(control);
      std::cout << mfadv::cmd_simulate(config, spec, out).dump(2) << "\n";
    } else if (verify->parsed()) {
      const mfadv::VerifyOutcome outcome = mfadv::cmd_verify(config, out);
      for (const auto& check : outcome.report["checks"]) {
        std::cout << (check["pass"].get<bool>() ? "PASS " : "FAIL ") << check["name"].get<std::string>() << "\n";
      }
      if (!outcome.pass) return mfadv::exit_verification_failed;
    } else if (sweep->parsed()) {
      std::cout << mfadv::cmd_sweep(config, param, parse_values(values), out).dump(2) << "\n";
    }
  } catch (const mfadv::ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& m : e.messages()) std::cerr << "  " << m << "\n";
    return mfadv::exit_config_error;
  } catch (const mfadv::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return mfadv::exit_input_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mfadv::exit_failure;
  }
  return mfadv::exit_ok;
}
