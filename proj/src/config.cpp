#include "mfadv/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <utility>

namespace mfadv {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += "; ";
    out += item;
  }
  return out;
}

/// One JSON object with a fixed key set; type errors are collected, not thrown.
class Section {
 public:
  Section(const json* node, std::string path, std::vector<std::string>& errors,
          std::vector<std::string> allowed)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (node_ == nullptr) return;
    if (!node_->is_object()) {
      errors_.push_back(path_ + " must be an object");
      node_ = nullptr;
      return;
    }
    for (const auto& item : node_->items()) {
      if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
        errors_.push_back("unknown key " + where(item.key()));
      }
    }
  }

  const json* child(const char* key) const {
    if (node_ == nullptr || !node_->contains(key)) return nullptr;
    return &(*node_)[key];
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) const {
    if (const json* v = child(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        errors_.push_back(where(key) + " must be a number");
      }
    }
  }

  void integer(const char* key, Index& out, Index min) const {
    if (const json* v = child(key)) {
      if (v->is_number_integer() && v->get<long long>() >= min) {
        out = static_cast<Index>(v->get<long long>());
      } else {
        errors_.push_back(where(key) + " must be an integer >= " + std::to_string(min));
      }
    }
  }

  void unsigned_integer(const char* key, std::uint64_t& out) const {
    if (const json* v = child(key)) {
      if (v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0)) {
        out = v->get<std::uint64_t>();
      } else {
        errors_.push_back(where(key) + " must be a non-negative integer");
      }
    }
  }

  void text(const char* key, std::string& out) const {
    if (const json* v = child(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        errors_.push_back(where(key) + " must be a string");
      }
    }
  }

  template <typename Enum>
  void choice(const char* key, Enum& out, std::initializer_list<std::pair<const char*, Enum>> options) const {
    const json* v = child(key);
    if (v == nullptr) return;
    if (v->is_string()) {
      for (const auto& [name, value] : options) {
        if (v->get<std::string>() == name) {
          out = value;
          return;
        }
      }
    }
    std::string names;
    for (const auto& option : options) names += (names.empty() ? "" : "|") + std::string(option.first);
    errors_.push_back(where(key) + " must be one of " + names);
  }

 private:
  const json* node_;
  std::string path_;
  std::vector<std::string>& errors_;
};

void parse_kernel(const json* node, const std::string& path, KernelSpec& out,
                  std::vector<std::string>& errors) {
  if (node == nullptr) return;
  if (node->is_number()) {
    out = KernelSpec{};
    out.preset = "uniform";
    out.value = node->get<double>();
    return;
  }
  if (node->is_array()) {
    out = KernelSpec{};
    out.preset = "samples";
    for (const auto& v : *node) {
      if (!v.is_number()) {
        errors.push_back(path + " samples must be numbers");
        return;
      }
      out.samples.push_back(v.get<double>());
    }
    return;
  }
  if (!node->is_object() || !node->contains("preset") || !(*node)["preset"].is_string()) {
    errors.push_back(path + " must be a number, an array of samples or an object with a preset");
    return;
  }
  out = KernelSpec{};
  out.preset = (*node)["preset"].get<std::string>();
  if (out.preset == "zero") {
    Section(node, path, errors, {"preset"});
  } else if (out.preset == "uniform") {
    Section s(node, path, errors, {"preset", "value"});
    s.number("value", out.value);
  } else if (out.preset == "exponential") {
    Section s(node, path, errors, {"preset", "scale", "rate"});
    s.number("scale", out.scale);
    s.number("rate", out.rate);
  } else if (out.preset == "samples") {
    Section s(node, path, errors, {"preset", "values"});
    const json* values = s.child("values");
    if (values == nullptr || !values->is_array()) {
      errors.push_back(path + ".values must be an array");
      return;
    }
    parse_kernel(values, path, out, errors);
  } else {
    errors.push_back(path + ".preset must be one of zero|uniform|exponential|samples");
  }
}

json kernel_to_json(const KernelSpec& k) {
  if (k.preset == "uniform") return json{{"preset", "uniform"}, {"value", k.value}};
  if (k.preset == "exponential") return json{{"preset", "exponential"}, {"scale", k.scale}, {"rate", k.rate}};
  if (k.preset == "samples") return json{{"preset", "samples"}, {"values", k.samples}};
  return json{{"preset", "zero"}};
}

const char* scheme_name(AdjointScheme s) { return s == AdjointScheme::direct ? "direct" : "recursive"; }
const char* variant_name(BVariant v) { return v == BVariant::halved ? "halved" : "ode"; }
const char* seam_name(SeamRule s) { return s == SeamRule::midpoint ? "midpoint" : "left_limit"; }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> messages)
    : std::runtime_error("invalid config: " + join(messages)), messages_(std::move(messages)) {}

Eigen::VectorXd KernelSpec::sample(double d, double dt) const {
  if (preset == "samples") return Eigen::Map<const Eigen::VectorXd>(samples.data(), static_cast<Index>(samples.size()));
  if (preset == "uniform") return uniform_kernel(d, dt, value);
  if (preset == "exponential") return exponential_kernel(d, dt, scale, rate);
  return zero_kernel(d, dt);
}

ModelParams<double> RunConfig::model() const {
  ModelParams<double> m;
  m.a0 = a0;
  m.a1 = a1;
  m.b0 = b0;
  m.sigma = sigma;
  m.d = d;
  m.T = T;
  m.r = r;
  m.x0 = x0;
  m.dt = dt;
  // Off-grid horizons leave the kernels empty; validate() reports the cause.
  if (dt > 0 && is_grid_multiple(d, dt)) {
    m.b1 = b1.sample(d, dt);
    m.delta = delta.sample(d, dt);
  }
  return m;
}

RunConfig parse_config(const json& doc) {
  std::vector<std::string> errors;
  RunConfig c;
  Section root(&doc, "", errors, {"model", "lq", "grid", "monte_carlo", "oracle", "solver", "output"});

  Section model(root.child("model"), "model", errors,
                {"a0", "a1", "b0", "b1", "sigma", "d", "T", "r", "x0", "delta"});
  model.number("a0", c.a0);
  model.number("a1", c.a1);
  model.number("b0", c.b0);
  model.number("sigma", c.sigma);
  model.number("d", c.d);
  model.number("T", c.T);
  model.number("r", c.r);
  model.number("x0", c.x0);
  parse_kernel(model.child("b1"), "model.b1", c.b1, errors);
  parse_kernel(model.child("delta"), "model.delta", c.delta, errors);

  Section lq(root.child("lq"), "lq", errors,
             {"alpha0", "alpha1", "beta0", "beta1", "gamma0", "gamma1", "lambda0", "lambda1"});
  lq.number("alpha0", c.lq.alpha0);
  lq.number("alpha1", c.lq.alpha1);
  lq.number("beta0", c.lq.beta0);
  lq.number("beta1", c.lq.beta1);
  lq.number("gamma0", c.lq.gamma0);
  lq.number("gamma1", c.lq.gamma1);
  lq.number("lambda0", c.lq.lambda0);
  lq.number("lambda1", c.lq.lambda1);

  Section grid(root.child("grid"), "grid", errors, {"dt", "refinement"});
  grid.number("dt", c.dt);
  grid.integer("refinement", c.refinement, 2);

  Section mc(root.child("monte_carlo"), "monte_carlo", errors, {"n_paths", "seed"});
  mc.integer("n_paths", c.n_paths, 2);
  mc.unsigned_integer("seed", c.seed);

  Section oracle(root.child("oracle"), "oracle", errors,
                 {"pieces", "jensen_trials", "jensen_paths", "random_controls", "identity_controls"});
  oracle.integer("pieces", c.pieces, 1);
  oracle.integer("jensen_trials", c.jensen_trials, 0);
  oracle.integer("jensen_paths", c.jensen_paths, 2);
  oracle.integer("random_controls", c.random_controls, 0);
  oracle.integer("identity_controls", c.identity_controls, 0);

  Section solver(root.child("solver"), "solver", errors, {"scheme", "b_variant", "seam"});
  solver.choice("scheme", c.solver.scheme,
                {{"recursive", AdjointScheme::recursive}, {"direct", AdjointScheme::direct}});
  solver.choice("b_variant", c.solver.b_variant, {{"ode", BVariant::ode}, {"halved", BVariant::halved}});
  solver.choice("seam", c.seam, {{"left_limit", SeamRule::left_limit}, {"midpoint", SeamRule::midpoint}});

  Section output(root.child("output"), "output", errors, {"directory", "formats", "max_trajectory_paths"});
  output.text("directory", c.out_dir);
  output.integer("max_trajectory_paths", c.max_trajectory_paths, 0);
  if (const json* formats = output.child("formats")) {
    c.formats.clear();
    if (!formats->is_array()) {
      errors.push_back("output.formats must be an array");
    } else {
      for (const auto& f : *formats) {
        if (f.is_string() && (f == "csv" || f == "json")) {
          c.formats.push_back(f.get<std::string>());
        } else {
          errors.push_back("output.formats entries must be \"csv\" or \"json\"");
        }
      }
    }
  }

  if (errors.empty()) {
    for (auto& e : validate(c.model(), c.lq)) errors.push_back(std::move(e));
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({"malformed JSON in " + path.string() + ": " + e.what()});
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"a0", c.a0}, {"a1", c.a1}, {"b0", c.b0}, {"b1", kernel_to_json(c.b1)},
                {"sigma", c.sigma}, {"d", c.d}, {"T", c.T}, {"r", c.r}, {"x0", c.x0},
                {"delta", kernel_to_json(c.delta)}};
  j["lq"] = {{"alpha0", c.lq.alpha0}, {"alpha1", c.lq.alpha1}, {"beta0", c.lq.beta0},
             {"beta1", c.lq.beta1},   {"gamma0", c.lq.gamma0}, {"gamma1", c.lq.gamma1},
             {"lambda0", c.lq.lambda0}, {"lambda1", c.lq.lambda1}};
  j["grid"] = {{"dt", c.dt}, {"refinement", c.refinement}};
  j["monte_carlo"] = {{"n_paths", c.n_paths}, {"seed", c.seed}};
  j["oracle"] = {{"pieces", c.pieces},
                 {"jensen_trials", c.jensen_trials},
                 {"jensen_paths", c.jensen_paths},
                 {"random_controls", c.random_controls},
                 {"identity_controls", c.identity_controls}};
  j["solver"] = {{"scheme", scheme_name(c.solver.scheme)},
                 {"b_variant", variant_name(c.solver.b_variant)},
                 {"seam", seam_name(c.seam)}};
  j["output"] = {{"directory", c.out_dir}, {"formats", c.formats},
                 {"max_trajectory_paths", c.max_trajectory_paths}};
  return j;
}

void set_parameter(RunConfig& config, const std::string& dotted, double value) {
  json doc = to_json(config);
  json* node = &doc;
  std::stringstream parts(dotted);
  std::string part;
  while (std::getline(parts, part, '.')) {
    if (!node->is_object() || !node->contains(part)) throw ConfigError({"unknown parameter " + dotted});
    node = &(*node)[part];
  }
  if (!node->is_number()) throw ConfigError({"parameter " + dotted + " is not numeric"});
  if (node->is_number_integer()) {
    *node = static_cast<long long>(value);
  } else {
    *node = value;
  }
  config = parse_config(doc);
}

Problem make_problem(const RunConfig& config) {
  try {
    return Problem(config.model(), config.lq, config.seam);
  } catch (const InvalidProblem& e) {
    throw ConfigError(e.violations());
  }
}

RunConfig fixture_config() {
  RunConfig c;
  c.a0 = -0.5;
  c.a1 = 0.2;
  c.b0 = 1.0;
  c.b1.preset = "exponential";
  c.sigma = 0.3;
  c.d = 0.5;
  c.T = 1.0;
  c.r = 0.05;
  c.x0 = 0.1;
  c.lq = {1.0, 0.3, 0.1, 0.05, 0.5, 0.25, 1.0, 0.2};
  c.dt = 1.0 / 400;
  c.n_paths = 20000;
  c.seed = 1;
  return c;
}

}  // namespace mfadv
