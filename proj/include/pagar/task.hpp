#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pagar/mdp.hpp"

namespace pagar {

// A task: which policies are acceptable, plus a preorder over policies.
// The order is induced by a scalar score; `order_override` can replace
// individual comparisons to build genuinely partial orders.
struct TaskSpec {
  using PolicyFn = std::function<double(const SoftPolicy&)>;

  std::string name;
  std::function<bool(const SoftPolicy&)> accepts;
  PolicyFn score;
  // Returns leq(a, b) when it wants to override the score comparison.
  std::function<std::optional<bool>(const SoftPolicy&, const SoftPolicy&)> order_override;
  // Named scalar metrics recorded during training (e.g. visit probabilities).
  std::vector<std::pair<std::string, PolicyFn>> metrics;

  // a is ranked no higher than b.
  bool leq(const SoftPolicy& a, const SoftPolicy& b) const {
    if (order_override) {
      if (auto o = order_override(a, b)) return *o;
    }
    return score(a) <= score(b);
  }
};

}  // namespace pagar
