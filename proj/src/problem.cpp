#include "mfadv/problem.hpp"

#include <utility>

namespace mfadv {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += "; ";
    out += item;
  }
  return out;
}

const ModelParams<double>& checked(const ModelParams<double>& model, const LQParams<double>& lq) {
  auto violations = validate(model, lq);
  if (!violations.empty()) throw InvalidProblem(std::move(violations));
  return model;
}

}  // namespace

InvalidProblem::InvalidProblem(std::vector<std::string> violations)
    : std::invalid_argument("invalid problem: " + join(violations)),
      violations_(std::move(violations)) {}

Problem::Problem(ModelParams<double> model_params, LQParams<double> lq_params, SeamRule seam)
    : model(std::move(model_params)),
      lq(lq_params),
      derived(derive(model, lq)),
      ops(checked(model, lq), -1, seam) {}

}  // namespace mfadv
