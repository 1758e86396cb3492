#pragma once

// Exhaustive checks of the alignment theory on finite policy grids: utility
// thresholds, task alignment, weak and strong acceptance, the policy-counting
// acceptance theorem and the decision-rule view of minimax regret.

#include <optional>
#include <span>
#include <vector>

#include "pagar/mdp.hpp"
#include "pagar/reward.hpp"
#include "pagar/task.hpp"

namespace pagar {

struct PolicyGrid {
  std::vector<SoftPolicy> policies;
  std::size_t resolution = 0;                // points per probability axis
  std::vector<std::size_t> decision_states;  // states with more than one action
  std::size_t size() const noexcept { return policies.size(); }
};

inline constexpr std::size_t kMaxDecisionDims = 12;
inline constexpr std::size_t kMaxGridPolicies = 2000000;

// Every policy whose action probabilities at each decision state are
// multiples of 1 / (resolution - 1); resolution 2 gives the deterministic
// policies. Decision states vary slowest-first in index order.
PolicyGrid enumerate_policy_grid(const TabularMdp& mdp, std::size_t resolution);

// Utility thresholds of one reward over a grid.
struct AlignmentReport {
  double u_underbar = 0.0;  // lowest utility of an accepted policy
  double u_overbar = 0.0;   // highest threshold above which utility order respects the task order
  bool aligned = false;     // every rejected policy is strictly below u_underbar
  std::size_t underbar_witness = 0;
  std::size_t overbar_witness = 0;
  std::size_t accepted = 0;
  bool boundary_tie = false;  // an equal-utility class mixes accepted and rejected policies
};

inline constexpr double kUtilityTieTolerance = 1e-12;

// Core on precomputed data. `leq(i, j)` is the task order between grid policies.
AlignmentReport thresholds_from_utilities(std::span<const double> utilities, const std::vector<bool>& accepted,
                                          const std::function<bool(std::size_t, std::size_t)>& leq,
                                          const std::vector<double>* scores = nullptr);
AlignmentReport compute_thresholds(const TabularMdp& mdp, const RewardTable& reward, const TaskSpec& task,
                                   const PolicyGrid& grid);

enum class Acceptance { strong, weak, neither, vacuous };
const char* to_string(Acceptance a);

struct AcceptanceReport {
  Acceptance verdict = Acceptance::vacuous;
  std::size_t aligned_rewards = 0;
  double underbar_margin = 0.0;  // min over aligned rewards of U(policy) - u_underbar
  double overbar_margin = 0.0;   // min over aligned rewards of U(policy) - u_overbar
};

AcceptanceReport check_acceptance(const TabularMdp& mdp, std::span<const RewardPoint> rewards, const TaskSpec& task,
                                  const PolicyGrid& grid, const SoftPolicy& policy, double tolerance = 1e-9);

// Counting form of the acceptance theorem. The reward set keeps rewards under
// which at most k other grid policies match or beat the expert; a grid policy
// satisfies the premise when, under every kept reward, fewer than
// |accepted| other policies match or beat it.
struct CountingReport {
  std::size_t kept_rewards = 0;
  bool aligned_member = false;   // some kept reward is task-aligned
  bool expert_accepted = false;
  std::size_t accepted_policies = 0;
  std::vector<std::size_t> premise_policies;
  std::vector<std::size_t> counterexamples;  // premise holds but the policy is rejected
  // The theorem's hypotheses hold: accepted expert and an aligned kept reward.
  bool applicable() const { return expert_accepted && aligned_member; }
  bool holds() const { return !applicable() || counterexamples.empty(); }
};

CountingReport theorem1_counting_check(const TabularMdp& mdp, std::span<const RewardPoint> rewards,
                                       const PolicyGrid& grid, const TaskSpec& task, const SoftPolicy& expert,
                                       std::size_t k);

// Mixture decision rule built from regrets: for each policy a weight on its
// worst-case reward plus a policy-conditioned distribution over the set.
struct DecisionRuleReport {
  bool agrees = false;               // argmax of the mixture utility solves minimax regret
  bool same_index = false;
  std::size_t argmax_index = 0;
  std::size_t minimax_index = 0;
  double minimax_value = 0.0;
  double argmax_worst_regret = 0.0;
  double utility_gap = 0.0;          // mixture utility at argmax minus at the minimax policy
  std::size_t constant_policies = 0; // excluded: same utility under every reward
  std::size_t non_dominated = 0;     // policies not weakly totally dominated
  std::size_t totally_dominated = 0;
  bool degenerate = false;           // every policy constant; the rule is a point mass
  // Diagnostic: the same comparison with totally dominated policies left out
  // of the argmax.
  bool agrees_excluding_totally_dominated = false;
  std::vector<double> mixture_utility;
};

inline constexpr double kConstantUtilityWidth = 1e-9;

// utilities: policies x rewards; best: max achievable utility per reward.
DecisionRuleReport decision_rule_equivalence(const Table& utilities, const Vector& best);
DecisionRuleReport decision_rule_equivalence(const TabularMdp& mdp, std::span<const RewardPoint> rewards,
                                             std::span<const SoftPolicy> policies);

// Nested-superlevel-set probe. When the grid's top set under the first reward
// lies inside the top set under the second, look for (p1, p2) with
// U1(p2) <= U1(p1), p2 below p1 in task order and U2(p2) >= U2(p1).
struct NestedProbe {
  bool nested = false;
  std::optional<std::pair<std::size_t, std::size_t>> witness;
};

NestedProbe prop1_probe(const TabularMdp& mdp, const RewardTable& first, const RewardTable& second,
                        const TaskSpec& task, const PolicyGrid& grid);

}  // namespace pagar
