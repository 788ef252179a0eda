// Drives the mfadv executable end to end through std::system.

#include "mfadv/config.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mfadv_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json coarse_doc() {
  mfadv::RunConfig c = mfadv::fixture_config();
  c.dt = 0.01;
  c.n_paths = 2000;
  return mfadv::to_json(c);
}

fs::path write_config(const fs::path& dir, const json& doc, const std::string& name = "run.json") {
  const fs::path path = dir / name;
  std::ofstream(path) << doc.dump(2);
  return path;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" MFADV_CLI "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& path) { return json::parse(slurp(path)); }

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, SolveWritesOutputsAndIsReproducible) {
  const fs::path dir = scratch("solve");
  const fs::path cfg = write_config(dir, coarse_doc());
  ASSERT_EQ(run("solve --config " + q(cfg) + " --out " + q(dir / "a")), 0);
  ASSERT_EQ(run("solve --config " + q(cfg) + " --out " + q(dir / "b")), 0);
  for (const char* f : {"lq_solution.csv", "summary.json"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const auto rows = read_csv(dir / "a" / "lq_solution.csv");
  EXPECT_EQ(rows.front(), (std::vector<std::string>{"s", "u_star", "q1", "q2", "b", "a_norm"}));
  EXPECT_EQ(rows.size(), 102u);
  const mfadv::RunConfig c = mfadv::fixture_config();
  const double uT = (c.b0 * (c.lq.lambda0 - c.lq.lambda1) - c.lq.beta0 - c.lq.beta1) / (2 * c.lq.gamma_sum());
  EXPECT_DOUBLE_EQ(std::stod(rows.back()[1]), uT);
  const json summary = read_json(dir / "a" / "summary.json");
  EXPECT_EQ(summary["terminal"]["b"].get<double>(), 0.0);
  EXPECT_EQ(std::stod(rows.back()[4]), 0.0);
}

TEST(Cli, ZeroRewardValueIsZero) {
  const fs::path dir = scratch("zero");
  json doc = coarse_doc();
  for (const char* k : {"alpha0", "alpha1", "beta0", "beta1", "lambda0", "lambda1"}) doc["lq"][k] = 0.0;
  ASSERT_EQ(run("solve --config " + q(write_config(dir, doc)) + " --out " + q(dir)), 0);
  EXPECT_EQ(read_json(dir / "summary.json")["value"].get<double>(), 0.0);
}

TEST(Cli, SimulateNoiselessPathsCoincide) {
  const fs::path dir = scratch("quiet");
  json doc = coarse_doc();
  doc["model"]["sigma"] = 0.0;
  ASSERT_EQ(run("simulate --config " + q(write_config(dir, doc)) + " --paths 3 --out " + q(dir)), 0);
  const auto rows = read_csv(dir / "trajectories.csv");
  ASSERT_EQ(rows.size(), 1u + 3 * 101);
  for (std::size_t k = 0; k < 101; ++k) {
    EXPECT_EQ(rows[1 + k][2], rows[1 + 101 + k][2]);
    EXPECT_EQ(rows[1 + k][2], rows[1 + 202 + k][2]);
  }
}

TEST(Cli, SimulateOptimalBeatsIdleAndIsReproducible) {
  const fs::path dir = scratch("simulate");
  const fs::path cfg = write_config(dir, coarse_doc());
  ASSERT_EQ(run("simulate --config " + q(cfg) + " --seed 5 --out " + q(dir / "opt")), 0);
  ASSERT_EQ(run("simulate --config " + q(cfg) + " --seed 5 --out " + q(dir / "again")), 0);
  ASSERT_EQ(run("simulate --config " + q(cfg) + " --seed 5 --control constant:0 --out " + q(dir / "idle")), 0);
  EXPECT_EQ(slurp(dir / "opt" / "estimate.json"), slurp(dir / "again" / "estimate.json"));
  const json opt = read_json(dir / "opt" / "estimate.json")["estimate"];
  const json idle = read_json(dir / "idle" / "estimate.json")["estimate"];
  const double se = std::hypot(opt["std_error"].get<double>(), idle["std_error"].get<double>());
  EXPECT_GE(opt["mean"].get<double>(), idle["mean"].get<double>() - 3 * se);
  EXPECT_EQ(read_json(dir / "opt" / "estimate.json")["seed"].get<int>(), 5);
}

TEST(Cli, SimulateFromControlFile) {
  const fs::path dir = scratch("file");
  const fs::path cfg = write_config(dir, coarse_doc());
  ASSERT_EQ(run("solve --config " + q(cfg) + " --out " + q(dir)), 0);
  EXPECT_EQ(run("simulate --config " + q(cfg) + " --control file:" + q(dir / "lq_solution.csv") + " --out " +
                q(dir / "sim")),
            0);
  EXPECT_EQ(run("simulate --config " + q(cfg) + " --control file:" + q(dir / "missing.csv") + " --out " +
                q(dir / "sim")),
            4);
  EXPECT_EQ(run("simulate --config " + q(cfg) + " --control sometimes --out " + q(dir / "sim")), 4);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const fs::path dir = scratch("bad");
  json doc = coarse_doc();
  doc["model"]["sigmaa"] = 1.0;
  EXPECT_EQ(run("solve --config " + q(write_config(dir, doc)) + " --out " + q(dir)), 2);
  doc = coarse_doc();
  doc["lq"]["gamma0"] = 0.0;
  EXPECT_EQ(run("solve --config " + q(write_config(dir, doc)) + " --out " + q(dir)), 2);
  EXPECT_EQ(run("solve --config " + q(dir / "nothing.json") + " --out " + q(dir)), 2);
  EXPECT_EQ(run("solve --config " + q(write_config(dir, coarse_doc())) + " --dt 0.003 --out " + q(dir)), 2);
}

TEST(Cli, OutputDirectoryPrecedence) {
  const fs::path dir = scratch("outdir");
  json doc = coarse_doc();
  const fs::path cfg = write_config(dir, doc);
  ASSERT_EQ(run("solve --config " + q(cfg), "cd " + q(dir) + " && MFADV_OUT_DIR=" + q(dir / "env")), 0);
  EXPECT_TRUE(fs::exists(dir / "env" / "summary.json"));
  doc["output"]["directory"] = (dir / "from_config").string();
  const fs::path cfg2 = write_config(dir, doc, "with_dir.json");
  ASSERT_EQ(run("solve --config " + q(cfg2), "MFADV_OUT_DIR=" + q(dir / "env2")), 0);
  EXPECT_TRUE(fs::exists(dir / "from_config" / "summary.json"));
  EXPECT_FALSE(fs::exists(dir / "env2"));
  ASSERT_EQ(run("solve --config " + q(cfg), "cd " + q(dir) + " && env -u MFADV_OUT_DIR"), 0);
  EXPECT_TRUE(fs::exists(dir / "mfadv_out" / "summary.json"));
}

TEST(Cli, VerifyPassesAndHalvedVariantFails) {
  const fs::path dir = scratch("verify");
  json doc = coarse_doc();
  ASSERT_EQ(run("verify --config " + q(write_config(dir, doc)) + " --out " + q(dir / "good")), 0);
  EXPECT_TRUE(read_json(dir / "good" / "verify_report.json")["pass"].get<bool>());

  doc["solver"]["b_variant"] = "halved";
  ASSERT_EQ(run("verify --config " + q(write_config(dir, doc, "halved.json")) + " --out " + q(dir / "bad")), 3);
  const json report = read_json(dir / "bad" / "verify_report.json");
  bool b_failed = false;
  for (const auto& check : report["checks"]) {
    if (check["name"] == "b_ode_ratio") b_failed = !check["pass"].get<bool>();
  }
  EXPECT_TRUE(b_failed);
}

TEST(Cli, SweepSigmaKeepsControlAndEmptyListIsFine) {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_config(dir, coarse_doc());
  ASSERT_EQ(run("sweep --config " + q(cfg) + " --param model.sigma --values 0,0.3,1 --out " + q(dir / "s")), 0);
  const auto rows = read_csv(dir / "s" / "sweep_u_star.csv");
  ASSERT_EQ(rows.front().size(), 4u);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    EXPECT_EQ(rows[r][1], rows[r][2]);
    EXPECT_EQ(rows[r][1], rows[r][3]);
  }
  EXPECT_EQ(read_csv(dir / "s" / "sweep.csv").size(), 4u);

  ASSERT_EQ(run("sweep --config " + q(cfg) + " --param model.sigma --values \"\" --out " + q(dir / "e")), 0);
  EXPECT_EQ(read_csv(dir / "e" / "sweep.csv").size(), 1u);
  EXPECT_EQ(read_json(dir / "e" / "sweep.json")["rows"].size(), 0u);

  EXPECT_EQ(run("sweep --config " + q(cfg) + " --param model.nope --values 1 --out " + q(dir / "x")), 2);
  EXPECT_EQ(run("sweep --config " + q(cfg) + " --param model.sigma --values 1,abc --out " + q(dir / "x")), 4);
}

TEST(Cli, SweepGammaShrinksControl) {
  const fs::path dir = scratch("gamma");
  const fs::path cfg = write_config(dir, coarse_doc());
  ASSERT_EQ(run("sweep --config " + q(cfg) + " --param lq.gamma0 --values 0.25,0.5,1,2,4 --out " + q(dir)), 0);
  const json rows = read_json(dir / "sweep.json")["rows"];
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(rows[i]["u_star_sup"].get<double>(), rows[i - 1]["u_star_sup"].get<double>());
  }
}
