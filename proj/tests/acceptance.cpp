// Acceptance run on the fixture: one line per criterion, exit status 1 if any fails.
// A criterion passes when all of its checks pass within its wall-clock budget.

#include "mfadv/config.hpp"
#include "mfadv/verification.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace mfadv;

namespace {

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<bool(std::vector<CheckResult>&)> run;
};

bool group(std::vector<CheckResult>& out, std::vector<CheckResult> checks) {
  out = std::move(checks);
  return all_pass(out);
}

}  // namespace

int main() {
  const RunConfig fixture = fixture_config();

  const std::vector<Criterion> criteria{
      {1, "terminal conditions exact", 1,
       [&](auto& out) { return group(out, verify_terminal(fixture)); }},
      {2, "optimality against the brute-force oracle", 30,
       [&](auto& out) { return group(out, verify_brute_force(fixture)); }},
      {3, "value function against Monte Carlo objectives", 60,
       [&](auto& out) { return group(out, verify_value_consistency(fixture)); }},
      {4, "fundamental identity and gap positivity", 120,
       [&](auto& out) { return group(out, verify_fundamental_identity(fixture)); }},
      {5, "Jensen dominance over random adapted controls", 300,
       [&](auto& out) { return group(out, verify_jensen(fixture)); }},
      {6, "lifted state projects onto the 2-D system", 60,
       [&](auto& out) { return group(out, verify_lift_equivalence(fixture)); }},
      {7, "semigroup algebra and matrix exponential", 5,
       [&](auto& out) { return group(out, verify_operator_algebra(fixture, 100)); }},
      {8, "sigma invariance of the solution", 90,
       [&](auto& out) { return group(out, verify_sigma_invariance(fixture, {0.0, 0.3, 1.0})); }},
      {9, "weak adjoint residual decays at first order", 30,
       [&](auto& out) { return group(out, verify_adjoint_residual(fixture, {1.0 / 100, 1.0 / 200, 1.0 / 400})); }},
      {10, "halved b variant is rejected by the ODE check", 5,
       [&](auto& out) {
         RunConfig halved = fixture;
         halved.solver.b_variant = BVariant::halved;
         std::vector<CheckResult> good = verify_b_residual(fixture);
         std::vector<CheckResult> bad = verify_b_residual(halved);
         out = good;
         for (auto& c : bad) {
           c.name = "halved_" + c.name;
           out.push_back(c);
         }
         // The correct variant must pass, the halved one must fail with a fitted ratio near 1/2.
         const CheckResult& ratio = bad[1];
         return all_pass(good) && !ratio.pass && std::abs(ratio.left - 0.5) <= 0.05;
       }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    std::vector<CheckResult> checks;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string error;
    try {
      ok = c.run(checks);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = seconds <= c.budget_seconds;
    const bool pass = ok && in_time && error.empty();
    if (!pass) ++failures;
    std::printf("%s  criterion %2d  %-48s %7.2f s (budget %g s)\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(),
                seconds, c.budget_seconds);
    for (const auto& k : checks) {
      std::printf("        %s %-30s left=%.6g right=%.6g tol=%.3g\n", k.pass ? "ok  " : "fail", k.name.c_str(), k.left,
                  k.right, k.tolerance);
    }
    if (!error.empty()) std::printf("        error: %s\n", error.c_str());
    if (!in_time) std::printf("        over the time budget\n");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
