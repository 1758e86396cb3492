#include "pagar/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pagar/error.hpp"
#include "pagar/solver.hpp"

namespace pagar {

namespace {

// Compositions of `total` units over `parts` slots, first slot largest first.
void compositions(std::size_t total, std::size_t parts, std::vector<std::size_t>& cur,
                  std::vector<std::vector<std::size_t>>& out) {
  if (parts == 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t c = total + 1; c-- > 0;) {
    cur.push_back(c);
    compositions(total - c, parts - 1, cur, out);
    cur.pop_back();
  }
}

// Precomputed per-policy task data shared by every reward.
struct TaskView {
  std::vector<bool> accepted;
  std::vector<double> scores;
  std::function<bool(std::size_t, std::size_t)> leq;
  bool pure_scores = true;
};

TaskView view_task(const TaskSpec& task, const PolicyGrid& grid) {
  TaskView v;
  v.accepted.reserve(grid.size());
  v.scores.reserve(grid.size());
  for (const auto& p : grid.policies) {
    v.accepted.push_back(task.accepts(p));
    v.scores.push_back(task.score(p));
  }
  v.pure_scores = !task.order_override;
  v.leq = [&task, &grid, scores = v.scores](std::size_t i, std::size_t j) {
    if (task.order_override) {
      if (auto o = task.order_override(grid.policies[i], grid.policies[j])) return *o;
    }
    return scores[i] <= scores[j];
  };
  return v;
}

std::vector<double> column(const Table& m, Eigen::Index j) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, j);
  return out;
}

AlignmentReport thresholds_for(std::span<const double> u, const TaskView& v) {
  return thresholds_from_utilities(u, v.accepted, v.leq, v.pure_scores ? &v.scores : nullptr);
}

}  // namespace

PolicyGrid enumerate_policy_grid(const TabularMdp& mdp, std::size_t resolution) {
  require(resolution >= 2, "policy grid resolution must be at least 2");
  PolicyGrid grid;
  grid.resolution = resolution;
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    if (mdp.is_decision_state(s)) grid.decision_states.push_back(s);
  if (resolution > 2 && grid.decision_states.size() > kMaxDecisionDims)
    throw GuardViolation("policy grid over " + std::to_string(grid.decision_states.size()) +
                         " decision states exceeds the guard of " + std::to_string(kMaxDecisionDims));

  // Candidate action distributions per decision state.
  std::vector<std::vector<std::vector<double>>> options;
  double total = 1.0;
  for (std::size_t s : grid.decision_states) {
    std::vector<std::size_t> actions;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      if (mdp.available(s, a)) actions.push_back(a);
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> cur;
    compositions(resolution - 1, actions.size(), cur, comps);
    std::vector<std::vector<double>> rows;
    for (const auto& c : comps) {
      std::vector<double> row(mdp.n_actions(), 0.0);
      for (std::size_t i = 0; i < actions.size(); ++i)
        row[actions[i]] = static_cast<double>(c[i]) / static_cast<double>(resolution - 1);
      rows.push_back(std::move(row));
    }
    total *= static_cast<double>(rows.size());
    options.push_back(std::move(rows));
  }
  if (total > static_cast<double>(kMaxGridPolicies))
    throw GuardViolation("policy grid would hold more than " + std::to_string(kMaxGridPolicies) + " policies");

  Table base = Table::Zero(mdp.n_states(), mdp.n_actions());
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    if (!mdp.is_decision_state(s))
      for (std::size_t a = 0; a < mdp.n_actions(); ++a)
        if (mdp.available(s, a)) {
          base(s, a) = 1.0;
          break;
        }

  std::vector<std::size_t> digit(options.size(), 0);
  const auto count = static_cast<std::size_t>(total);
  grid.policies.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Table probs = base;
    for (std::size_t d = 0; d < options.size(); ++d)
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) probs(grid.decision_states[d], a) = options[d][digit[d]][a];
    grid.policies.push_back(SoftPolicy::from_probabilities(probs));
    for (std::size_t d = options.size(); d-- > 0;) {
      if (++digit[d] < options[d].size()) break;
      digit[d] = 0;
    }
  }
  return grid;
}

AlignmentReport thresholds_from_utilities(std::span<const double> utilities, const std::vector<bool>& accepted,
                                          const std::function<bool(std::size_t, std::size_t)>& leq,
                                          const std::vector<double>* scores) {
  const std::size_t n = utilities.size();
  require(n > 0 && accepted.size() == n, "threshold inputs must be non-empty and aligned");
  AlignmentReport rep;
  rep.u_underbar = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (accepted[i]) {
      ++rep.accepted;
      if (utilities[i] < rep.u_underbar) {
        rep.u_underbar = utilities[i];
        rep.underbar_witness = i;
      }
    }
  rep.aligned = rep.accepted > 0;
  for (std::size_t i = 0; i < n && rep.aligned; ++i)
    if (!accepted[i] && utilities[i] >= rep.u_underbar - kUtilityTieTolerance) rep.aligned = false;

  // Equal-utility classes in ascending order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return utilities[a] < utilities[b]; });
  std::vector<std::size_t> cls(n);
  std::vector<std::size_t> class_start{0};
  for (std::size_t k = 1; k < n; ++k) {
    if (utilities[order[k]] - utilities[order[k - 1]] > kUtilityTieTolerance) class_start.push_back(k);
    cls[order[k]] = class_start.size() - 1;
  }
  cls[order[0]] = 0;
  const std::size_t n_classes = class_start.size();
  auto class_end = [&](std::size_t c) { return c + 1 < n_classes ? class_start[c + 1] : n; };
  for (std::size_t c = 0; c < n_classes; ++c) {
    bool acc = false, rej = false;
    for (std::size_t k = class_start[c]; k < class_end(c); ++k) (accepted[order[k]] ? acc : rej) = true;
    if (acc && rej) rep.boundary_tie = true;
  }

  // valid[c]: every policy in a lower class is ranked no higher than every
  // policy in class c or above. Class 0 is always valid.
  std::vector<bool> valid(n_classes, true);
  if (scores) {
    std::vector<double> prefix_max(n_classes, -std::numeric_limits<double>::infinity());
    std::vector<double> suffix_min(n_classes + 1, std::numeric_limits<double>::infinity());
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_classes; ++c) {
      prefix_max[c] = running;  // classes strictly below c
      for (std::size_t k = class_start[c]; k < class_end(c); ++k) running = std::max(running, (*scores)[order[k]]);
    }
    for (std::size_t c = n_classes; c-- > 0;) {
      suffix_min[c] = suffix_min[c + 1];
      for (std::size_t k = class_start[c]; k < class_end(c); ++k)
        suffix_min[c] = std::min(suffix_min[c], (*scores)[order[k]]);
    }
    for (std::size_t c = 1; c < n_classes; ++c) valid[c] = prefix_max[c] <= suffix_min[c];
  } else {
    // A violating pair (i below j) invalidates every split between their classes.
    std::vector<int> diff(n_classes + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (cls[i] < cls[j] && !leq(i, j)) {
          ++diff[cls[i] + 1];
          --diff[cls[j] + 1];
        }
    int running = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      running += diff[c];
      valid[c] = running == 0;
    }
  }
  std::size_t top = 0;
  for (std::size_t c = n_classes; c-- > 0;)
    if (valid[c]) {
      top = c;
      break;
    }
  rep.overbar_witness = order[class_end(top) - 1];
  rep.u_overbar = utilities[rep.overbar_witness];
  return rep;
}

AlignmentReport compute_thresholds(const TabularMdp& mdp, const RewardTable& reward, const TaskSpec& task,
                                   const PolicyGrid& grid) {
  require(grid.size() > 0, "policy grid is empty");
  const TaskView v = view_task(task, grid);
  const std::vector<RewardTable> rewards{reward};
  const Table u = utility_matrix(mdp, rewards, grid.policies);
  AlignmentReport rep = thresholds_for(column(u, 0), v);
  if (rep.accepted == 0) throw InvalidArgument("no grid policy is accepted by the task");
  return rep;
}

const char* to_string(Acceptance a) {
  switch (a) {
    case Acceptance::strong: return "strong";
    case Acceptance::weak: return "weak";
    case Acceptance::neither: return "neither";
    case Acceptance::vacuous: return "vacuous";
  }
  return "unknown";
}

AcceptanceReport check_acceptance(const TabularMdp& mdp, std::span<const RewardPoint> rewards, const TaskSpec& task,
                                  const PolicyGrid& grid, const SoftPolicy& policy, double tolerance) {
  require(grid.size() > 0, "policy grid is empty");
  const TaskView v = view_task(task, grid);
  const auto tables = reward_tables(rewards);
  const Table u = utility_matrix(mdp, tables, grid.policies);
  const std::vector<SoftPolicy> single{policy};
  const Table own = utility_matrix(mdp, tables, single);

  AcceptanceReport rep;
  rep.underbar_margin = std::numeric_limits<double>::infinity();
  rep.overbar_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const AlignmentReport t = thresholds_for(column(u, j), v);
    if (!t.aligned) continue;
    ++rep.aligned_rewards;
    rep.underbar_margin = std::min(rep.underbar_margin, own(0, j) - t.u_underbar);
    rep.overbar_margin = std::min(rep.overbar_margin, own(0, j) - t.u_overbar);
  }
  if (rep.aligned_rewards == 0) {
    rep.verdict = Acceptance::vacuous;
  } else if (rep.overbar_margin >= -tolerance) {
    rep.verdict = Acceptance::strong;
  } else if (rep.underbar_margin >= -tolerance) {
    rep.verdict = Acceptance::weak;
  } else {
    rep.verdict = Acceptance::neither;
  }
  return rep;
}

CountingReport theorem1_counting_check(const TabularMdp& mdp, std::span<const RewardPoint> rewards,
                                       const PolicyGrid& grid, const TaskSpec& task, const SoftPolicy& expert,
                                       std::size_t k) {
  require(grid.size() > 0, "policy grid is empty");
  const TaskView v = view_task(task, grid);
  const auto tables = reward_tables(rewards);
  const Table u = utility_matrix(mdp, tables, grid.policies);
  const std::vector<SoftPolicy> single{expert};
  const Table ue = utility_matrix(mdp, tables, single);
  const std::size_t n = grid.size();

  CountingReport rep;
  rep.expert_accepted = task.accepts(expert);
  rep.accepted_policies = static_cast<std::size_t>(std::count(v.accepted.begin(), v.accepted.end(), true));
  std::vector<bool> is_expert(n);
  for (std::size_t i = 0; i < n; ++i)
    is_expert[i] = (grid.policies[i].probs() - expert.probs()).cwiseAbs().maxCoeff() <= kProbabilityTolerance;

  std::vector<bool> premise(n, true);
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const std::vector<double> col = column(u, j);
    std::size_t beat_expert = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!is_expert[i] && col[i] >= ue(0, j) - kUtilityTieTolerance) ++beat_expert;
    if (beat_expert > k) continue;
    ++rep.kept_rewards;
    if (thresholds_for(col, v).aligned) rep.aligned_member = true;
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) {
      const auto at_least = static_cast<std::size_t>(
          sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), col[i] - kUtilityTieTolerance));
      if (at_least - 1 >= rep.accepted_policies) premise[i] = false;  // minus the policy itself
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!premise[i]) continue;
    rep.premise_policies.push_back(i);
    if (!v.accepted[i]) rep.counterexamples.push_back(i);
  }
  return rep;
}

DecisionRuleReport decision_rule_equivalence(const Table& utilities, const Vector& best) {
  const auto np = static_cast<std::size_t>(utilities.rows());
  const auto nr = static_cast<std::size_t>(utilities.cols());
  require(np > 0 && nr > 0 && static_cast<std::size_t>(best.size()) == nr, "decision-rule inputs have wrong shape");
  const Table regrets = (-utilities).rowwise() + best.transpose();
  const double kNegInf = -std::numeric_limits<double>::infinity();
  constexpr double kRegretTol = 1e-9;

  DecisionRuleReport rep;
  std::vector<double> hi(np), lo(np), worst(np);
  std::vector<bool> constant(np);
  for (std::size_t i = 0; i < np; ++i) {
    const auto row = utilities.row(static_cast<Eigen::Index>(i));
    hi[i] = row.maxCoeff();
    lo[i] = row.minCoeff();
    worst[i] = regrets.row(static_cast<Eigen::Index>(i)).maxCoeff();
    constant[i] = hi[i] - lo[i] < kConstantUtilityWidth;
    if (constant[i]) ++rep.constant_policies;
  }
  rep.mixture_utility.assign(np, kNegInf);

  std::vector<bool> weakly_dominated(np, false), totally_dominated(np, false);
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < np; ++j) {
      if (i == j || constant[j]) continue;
      if (hi[i] <= lo[j]) weakly_dominated[i] = true;
      if (hi[i] < lo[j]) totally_dominated[i] = true;
    }

  // Minimax over the policies that satisfy the non-constant assumption; a
  // fully constant instance keeps every policy.
  rep.degenerate = rep.constant_policies == np;
  std::vector<bool> eligible(np);
  for (std::size_t i = 0; i < np; ++i) eligible[i] = rep.degenerate || !constant[i];
  double minimax = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < np; ++i)
    if (eligible[i] && worst[i] < minimax - kRegretTol) {
      minimax = worst[i];
      rep.minimax_index = i;
    }
  rep.minimax_value = minimax;

  std::vector<bool> non_dominated(np);
  double c = kNegInf;
  for (std::size_t i = 0; i < np; ++i) {
    non_dominated[i] = !constant[i] && !weakly_dominated[i];
    if (non_dominated[i]) {
      ++rep.non_dominated;
      c = std::max(c, lo[i]);
    }
    if (!constant[i] && totally_dominated[i]) ++rep.totally_dominated;
  }

  if (rep.degenerate || rep.non_dominated == 0) {
    // Every reward ranks the eligible policies alike; a point mass on the
    // first reward is a valid rule.
    for (std::size_t i = 0; i < np; ++i)
      if (eligible[i]) rep.mixture_utility[i] = -worst[i];
  } else {
    for (std::size_t i = 0; i < np; ++i) {
      if (constant[i]) continue;
      // Worst-case reward; ties go to the one under which the policy does best.
      const auto row = static_cast<Eigen::Index>(i);
      double star_u = kNegInf;
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(nr); ++j)
        if (regrets(row, j) >= worst[i] - kRegretTol) star_u = std::max(star_u, utilities(row, j));
      double background;
      if (non_dominated[i]) {
        background = c;
      } else if (!totally_dominated[i]) {
        background = hi[i];
      } else {
        background = utilities.row(row).mean();
      }
      if (std::abs(c - star_u) < kUtilityTieTolerance) {
        // Zero denominator: the limit of the mixture for a non-dominated policy.
        rep.mixture_utility[i] = non_dominated[i] ? c - worst[i] : kNegInf;
      } else {
        const double w = worst[i] / (c - star_u);
        rep.mixture_utility[i] = w * star_u + (1.0 - w) * background;
      }
    }
  }

  auto argmax = [&](bool skip_totally_dominated) {
    std::size_t best_i = 0;
    double best_v = kNegInf;
    bool found = false;
    for (std::size_t i = 0; i < np; ++i) {
      if (!eligible[i]) continue;
      if (skip_totally_dominated && totally_dominated[i] && !rep.degenerate) continue;
      if (!found || rep.mixture_utility[i] > best_v + kRegretTol) {
        best_v = rep.mixture_utility[i];
        best_i = i;
        found = true;
      }
    }
    return best_i;
  };
  rep.argmax_index = argmax(false);
  rep.argmax_worst_regret = worst[rep.argmax_index];
  rep.agrees = rep.argmax_worst_regret <= minimax + kRegretTol;
  rep.same_index = rep.argmax_index == rep.minimax_index;
  rep.utility_gap = rep.mixture_utility[rep.argmax_index] - rep.mixture_utility[rep.minimax_index];
  if (!std::isfinite(rep.utility_gap)) rep.utility_gap = std::numeric_limits<double>::infinity();
  rep.agrees_excluding_totally_dominated = worst[argmax(true)] <= minimax + kRegretTol;
  return rep;
}

DecisionRuleReport decision_rule_equivalence(const TabularMdp& mdp, std::span<const RewardPoint> rewards,
                                             std::span<const SoftPolicy> policies) {
  const auto tables = reward_tables(rewards);
  return decision_rule_equivalence(utility_matrix(mdp, tables, policies), optimal_utilities(mdp, tables));
}

NestedProbe prop1_probe(const TabularMdp& mdp, const RewardTable& first, const RewardTable& second,
                        const TaskSpec& task, const PolicyGrid& grid) {
  require(grid.size() > 0, "policy grid is empty");
  const TaskView v = view_task(task, grid);
  const std::vector<RewardTable> rewards{first, second};
  const Table u = utility_matrix(mdp, rewards, grid.policies);
  const std::vector<double> u1 = column(u, 0), u2 = column(u, 1);
  const double top1 = thresholds_for(u1, v).u_overbar;
  const double top2 = thresholds_for(u2, v).u_overbar;
  const std::size_t n = grid.size();
  std::vector<std::size_t> s1, s2;
  for (std::size_t i = 0; i < n; ++i) {
    if (u1[i] >= top1 - kUtilityTieTolerance) s1.push_back(i);
    if (u2[i] >= top2 - kUtilityTieTolerance) s2.push_back(i);
  }
  NestedProbe probe;
  probe.nested = std::includes(s2.begin(), s2.end(), s1.begin(), s1.end());
  if (!probe.nested) return probe;
  for (std::size_t i : s1)
    for (std::size_t j : s2)
      if (u1[j] <= u1[i] + kUtilityTieTolerance && v.leq(j, i) && u2[j] >= u2[i] - kUtilityTieTolerance) {
        probe.witness = std::make_pair(i, j);
        return probe;
      }
  return probe;
}

}  // namespace pagar
