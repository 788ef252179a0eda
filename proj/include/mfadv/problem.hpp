#pragma once

#include "mfadv/hilbert.hpp"
#include "mfadv/model.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace mfadv {

/// Thrown when model or reward data violate their constraints.
class InvalidProblem : public std::invalid_argument {
 public:
  explicit InvalidProblem(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Validated model, reward data and lifted operators on the double grid.
struct Problem {
  ModelParams<double> model;
  LQParams<double> lq;
  DerivedVectors<double> derived;
  LiftedOperators<double> ops;

  Problem(ModelParams<double> model_params, LQParams<double> lq_params,
          SeamRule seam = SeamRule::left_limit);

  double dt() const { return model.dt; }
  Index time_steps() const { return model.time_steps(); }
  Index delay_steps() const { return model.delay_steps(); }
};

}  // namespace mfadv
