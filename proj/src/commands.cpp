#include "mfadv/commands.hpp"

#include "mfadv/io.hpp"
#include "mfadv/lq_solver.hpp"
#include "mfadv/oracle.hpp"
#include "mfadv/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mfadv {

using nlohmann::json;

namespace {

bool wants(const RunConfig& config, const char* format) {
  return std::find(config.formats.begin(), config.formats.end(), format) != config.formats.end();
}

std::string config_hash(const RunConfig& config) {
  std::ostringstream s;
  s << std::hex << fnv1a(to_json(config).dump());
  return s.str();
}

json grid_json(const Problem& p) {
  return {{"dt", p.dt()}, {"time_steps", p.time_steps()}, {"delay_steps", p.delay_steps()}};
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) --end;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) throw InputError("cannot parse " + what + " '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream s(line);
  while (std::getline(s, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

/// Control values from a CSV with a header containing a "u" or "u_star" column.
Eigen::VectorXd read_control_file(const std::filesystem::path& path, Index expected) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open control file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError("control file " + path.string() + " is empty");
  const auto header = split(line, ',');
  auto it = std::find(header.begin(), header.end(), "u");
  if (it == header.end()) it = std::find(header.begin(), header.end(), "u_star");
  if (it == header.end()) throw InputError("control file needs a 'u' or 'u_star' column");
  const auto column = static_cast<std::size_t>(it - header.begin());
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, ',');
    if (cells.size() <= column) throw InputError("short row in control file " + path.string());
    values.push_back(parse_double(cells[column], "control value"));
  }
  if (static_cast<Index>(values.size()) != expected) {
    throw InputError("control file has " + std::to_string(values.size()) + " rows, expected " +
                     std::to_string(expected));
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), expected);
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

ControlSpec parse_control_spec(const std::string& text) {
  ControlSpec spec;
  if (text == "optimal") return spec;
  if (text.rfind("constant:", 0) == 0) {
    spec.kind = ControlSpec::Kind::constant;
    spec.constant = parse_double(text.substr(9), "constant control");
    return spec;
  }
  if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    spec.kind = ControlSpec::Kind::file;
    spec.file = text.substr(5);
    return spec;
  }
  throw InputError("control must be optimal, constant:C or file:PATH, got '" + text + "'");
}

json cmd_solve(const RunConfig& config, const std::filesystem::path& out) {
  const Problem p = make_problem(config);
  const LQSolution<double> sol = solve_lq(p.ops, p.model, p.lq, config.solver);
  const OriginalSolution<double> orig = solve_original(sol, p.ops, 0, p.model.x0, p.model.delta);

  if (wants(config, "csv")) {
    CsvTable table({"s", "u_star", "q1", "q2", "b", "a_norm"});
    for (Index n = 0; n <= sol.time_steps; ++n) {
      table.add_numbers({sol.time(n), sol.u_star(n), sol.q(0, n), sol.q(1, n), sol.b(n),
                         norm(sol.a[static_cast<std::size_t>(n)], sol.dt)});
    }
    write_csv(out / "lq_solution.csv", table);
  }

  const auto& aT = sol.a.back();
  json summary;
  summary["value"] = orig.value;
  summary["x0"] = p.model.x0;
  summary["grid"] = grid_json(p);
  summary["config_hash"] = config_hash(config);
  summary["u_star_initial"] = sol.u_star(0);
  summary["u_star_terminal"] = sol.u_star(sol.time_steps);
  summary["u_star_sup"] = sup_norm(sol.u_star);
  summary["b_initial"] = sol.b(0);
  summary["terminal"] = {
      {"a_y0_gap", (aT.y0 - p.derived.lambda_tilde).cwiseAbs().maxCoeff()},
      {"a_y1_sup", aT.y1.cwiseAbs().maxCoeff()},
      {"b", sol.b(sol.time_steps)},
  };
  if (wants(config, "json")) write_json(out / "summary.json", summary);
  return summary;
}

json cmd_simulate(const RunConfig& config, const ControlSpec& control, const std::filesystem::path& out) {
  const Problem p = make_problem(config);
  const Index N = p.time_steps();
  Eigen::VectorXd values;
  LQSolution<double> sol;
  const bool optimal = control.kind == ControlSpec::Kind::optimal;
  if (optimal) {
    sol = solve_lq(p.ops, p.model, p.lq, config.solver);
    values = sol.u_star;
  } else if (control.kind == ControlSpec::Kind::constant) {
    values = Eigen::VectorXd::Constant(N + 1, control.constant);
  } else {
    values = read_control_file(control.file, N + 1);
  }
  const ControlPath u = control_from_solution(p, values);
  const NoiseBatch noise = brownian_increments(config.n_paths, N, p.dt(), config.seed);
  const SimBatch batch = simulate_mean_field_sdde(p, 0, p.model.x0, u, noise);
  const Estimate est = summarize(path_objectives(p, batch, u));
  const HilbertPoint<double> y = lift_initial_state(p.ops, p.model.x0, p.model.delta);
  const Estimate lifted = estimate_J_lifted(p, 0, y, u, u, noise);

  if (wants(config, "csv")) {
    CsvTable table({"path", "s", "x", "mean_x"});
    const Index shown = std::min<Index>(config.max_trajectory_paths, batch.paths());
    for (Index i = 0; i < shown; ++i) {
      for (Index k = 0; k <= N; ++k) {
        table.add_row({std::to_string(i), format_number(static_cast<double>(k) * p.dt()),
                       format_number(batch.x(i, k)), format_number(batch.m(k))});
      }
    }
    write_csv(out / "trajectories.csv", table);
  }

  json summary;
  summary["control"] = optimal ? "optimal"
                       : control.kind == ControlSpec::Kind::constant ? "constant"
                                                                     : "file";
  summary["estimate"] = {{"mean", est.mean}, {"std_error", est.std_error}};
  summary["lifted_estimate"] = {{"mean", lifted.mean}, {"std_error", lifted.std_error}};
  summary["n_paths"] = config.n_paths;
  summary["seed"] = config.seed;
  summary["grid"] = grid_json(p);
  summary["config_hash"] = config_hash(config);
  if (optimal) summary["value"] = sol.value_at_start;
  if (wants(config, "json")) write_json(out / "estimate.json", summary);
  return summary;
}

VerifyOutcome cmd_verify(const RunConfig& config, const std::filesystem::path& out) {
  make_problem(config);
  const std::vector<CheckResult> checks = verify_all(config);
  VerifyOutcome outcome;
  outcome.pass = all_pass(checks);
  json list = json::array();
  for (const auto& c : checks) list.push_back(to_json(c));
  outcome.report = {{"checks", list}, {"pass", outcome.pass}, {"config_hash", config_hash(config)}};
  write_json(out / "verify_report.json", outcome.report);
  return outcome;
}

json cmd_sweep(const RunConfig& config, const std::string& parameter, const std::vector<double>& values,
               const std::filesystem::path& out) {
  CsvTable table({"value", "V", "u_star_initial", "u_star_terminal", "u_star_sup", "b_initial"});
  std::vector<std::string> header{"s"};
  std::vector<Eigen::VectorXd> columns;
  Eigen::VectorXd times;
  json rows = json::array();
  for (double v : values) {
    RunConfig c = config;
    set_parameter(c, parameter, v);
    const Problem p = make_problem(c);
    const LQSolution<double> sol = solve_lq(p.ops, p.model, p.lq, c.solver);
    table.add_numbers({v, sol.value_at_start, sol.u_star(0), sol.u_star(sol.time_steps), sup_norm(sol.u_star),
                       sol.b(0)});
    rows.push_back({{"value", v}, {"V", sol.value_at_start}, {"u_star_sup", sup_norm(sol.u_star)}});
    header.push_back("u_star@" + format_number(v));
    columns.push_back(sol.u_star);
    if (times.size() == 0) {
      times.resize(sol.time_steps + 1);
      for (Index n = 0; n <= sol.time_steps; ++n) times(n) = sol.time(n);
    }
  }
  if (wants(config, "csv")) {
    write_csv(out / "sweep.csv", table);
    // One u* column per value; grids may differ when sweeping dt, so only equal lengths share a table.
    const bool aligned = std::all_of(columns.begin(), columns.end(),
                                     [&](const Eigen::VectorXd& col) { return col.size() == times.size(); });
    if (aligned) {
      CsvTable controls(header);
      for (Index n = 0; n < times.size(); ++n) {
        std::vector<double> row{times(n)};
        for (const auto& col : columns) row.push_back(col(n));
        controls.add_numbers(row);
      }
      write_csv(out / "sweep_u_star.csv", controls);
    }
  }
  json summary = {{"parameter", parameter}, {"rows", rows}};
  if (wants(config, "json")) write_json(out / "sweep.json", summary);
  return summary;
}

}  // namespace mfadv
