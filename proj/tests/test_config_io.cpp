#include "mfadv/config.hpp"
#include "mfadv/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace mfadv;
using nlohmann::json;

namespace {

std::vector<std::string> errors_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.messages();
  }
  return {};
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors) {
    if (e.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Config, RoundTripsThroughJson) {
  const RunConfig c = fixture_config();
  const RunConfig back = parse_config(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  EXPECT_EQ(back.model().b1, c.model().b1);
}

TEST(Config, ShippedFixtureMatchesBuiltIn) {
  const RunConfig file = load_config(MFADV_SOURCE_DIR "/configs/fixture.json");
  EXPECT_EQ(to_json(file).dump(), to_json(fixture_config()).dump());
}

TEST(Config, UnknownKeysAreErrors) {
  json doc = to_json(fixture_config());
  doc["model"]["sigmaa"] = 0.3;
  doc["extra"] = 1;
  const auto errors = errors_of(doc);
  EXPECT_TRUE(mentions(errors, "model.sigmaa"));
  EXPECT_TRUE(mentions(errors, "extra"));
}

TEST(Config, CollectsEveryViolation) {
  json doc = to_json(fixture_config());
  doc["lq"]["gamma0"] = 0;
  doc["grid"]["dt"] = 0.003;
  const auto errors = errors_of(doc);
  EXPECT_TRUE(mentions(errors, "gamma0 must be > 0"));
  EXPECT_TRUE(mentions(errors, "multiple of dt"));

  doc = to_json(fixture_config());
  doc["monte_carlo"]["n_paths"] = "many";
  doc["oracle"]["pieces"] = -2;
  const auto types = errors_of(doc);
  EXPECT_TRUE(mentions(types, "n_paths"));
  EXPECT_TRUE(mentions(types, "pieces"));
}

TEST(Config, KernelSamplesMustFitTheGrid) {
  json doc = to_json(fixture_config());
  doc["model"]["b1"] = {{"preset", "samples"}, {"samples", {1.0, 2.0}}};
  EXPECT_FALSE(errors_of(doc).empty());
}

TEST(Config, KernelPresetsFollowTheGrid) {
  RunConfig c = fixture_config();
  c.dt = 0.01;
  const Eigen::VectorXd b1 = c.model().b1;
  ASSERT_EQ(b1.size(), 51);
  EXPECT_NEAR(b1(0), std::exp(-0.5), 1e-15);
  EXPECT_EQ(b1(50), 1.0);
}

TEST(Config, SetParameterByPath) {
  RunConfig c = fixture_config();
  set_parameter(c, "model.sigma", 1.5);
  set_parameter(c, "lq.gamma0", 2.0);
  set_parameter(c, "grid.dt", 0.01);
  EXPECT_EQ(c.sigma, 1.5);
  EXPECT_EQ(c.lq.gamma0, 2.0);
  EXPECT_EQ(c.dt, 0.01);
  EXPECT_THROW(set_parameter(c, "model.nope", 1.0), ConfigError);
  EXPECT_THROW(set_parameter(c, "lq.gamma1", -1.0), ConfigError);
}

TEST(Config, MakeProblemMapsViolations) {
  RunConfig c = fixture_config();
  c.lq.gamma1 = 0;
  EXPECT_THROW(make_problem(c), ConfigError);
}

TEST(Io, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    const std::string s = format_number(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(3.0), "3");
}

TEST(Io, CsvLayout) {
  CsvTable t({"a", "b"});
  t.add_numbers({1.0, 0.25}).add_row({"x", "y"});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.str(), "a,b\n1,0.25\nx,y\n");
  EXPECT_THROW(t.add_row({"only"}), std::invalid_argument);
}

TEST(Io, FilesUseLfAndSortedKeys) {
  const auto dir = std::filesystem::temp_directory_path() / "mfadv_io_test";
  std::filesystem::create_directories(dir);
  write_json(dir / "doc.json", json{{"zeta", 1}, {"alpha", 2}});
  std::ifstream in(dir / "doc.json", std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_LT(text.find("alpha"), text.find("zeta"));
  EXPECT_EQ(text.back(), '\n');
  std::filesystem::remove_all(dir);
}
