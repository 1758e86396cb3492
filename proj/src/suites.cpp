#include "pagar/suites.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "pagar/alignment.hpp"
#include "pagar/envs.hpp"
#include "pagar/error.hpp"

namespace pagar {
namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(unit_from_bits(rng()) * static_cast<double>(hi - lo + 1)) % (hi - lo + 1);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_from_bits(rng()); }

// Runs fn(index) for each selected instance on up to `workers` threads and
// stores results by position, so the report does not depend on scheduling.
template <typename Fn>
SuiteReport run_instances(const std::string& name, const SuiteOptions& opts, Fn fn) {
  if (opts.size == 0) throw ConfigError("suite '" + name + "' has size 0");
  std::vector<std::size_t> indices;
  if (opts.only) {
    if (*opts.only >= opts.size) throw ConfigError("instance index outside the suite");
    indices.push_back(*opts.only);
  } else {
    for (std::size_t i = 0; i < opts.size; ++i) indices.push_back(i);
  }

  const auto start = std::chrono::steady_clock::now();
  SuiteReport report{name, std::vector<InstanceOutcome>(indices.size()), 0.0};
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t k = next++; k < indices.size(); k = next++) {
      try {
        const std::size_t i = indices[k];
        InstanceOutcome out = fn(i, instance_seed(opts.seed, i));
        out.index = i;
        out.seed = instance_seed(opts.seed, i);
        report.outcomes[k] = std::move(out);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(opts.workers, 1, indices.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// Task ranking policies by utility under a hidden reward; acceptance is
// utility at or above `threshold`.
TaskSpec hidden_utility_task(const TabularMdp& mdp, const RewardTable& hidden, double threshold) {
  auto shared = std::make_shared<TabularMdp>(mdp);
  auto table = std::make_shared<RewardTable>(hidden);
  TaskSpec task;
  task.name = "hidden-utility";
  task.score = [shared, table, threshold](const SoftPolicy& pi) {
    return policy_utility(*shared, *table, pi) - threshold;
  };
  task.accepts = [score = task.score](const SoftPolicy& pi) { return score(pi) >= 0.0; };
  return task;
}

std::vector<RewardPoint> random_reward_points(std::size_t n, std::size_t states, std::size_t actions,
                                              std::mt19937_64& rng) {
  std::vector<RewardPoint> points;
  for (std::size_t j = 0; j < n; ++j) points.push_back({Vector(), random_table(states, actions, rng())});
  return points;
}

}  // namespace

double InstanceOutcome::value(const std::string& key) const {
  for (const auto& [k, v] : values)
    if (k == key) return v;
  throw InvalidArgument("no value named " + key);
}

std::size_t SuiteReport::failures() const {
  return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.passed; }));
}

std::size_t SuiteReport::applicable() const {
  return static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.applicable; }));
}

std::uint64_t instance_seed(std::uint64_t suite_seed, std::size_t index) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = suite_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SuiteReport bound_suite(const SuiteOptions& opts) {
  return run_instances("bounds", opts, [](std::size_t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t states = uniform_index(rng, 2, 6);
    const std::size_t actions = uniform_index(rng, 2, 3);
    RandomMdpOptions mo;
    mo.gamma = uniform_real(rng, 0.5, 0.95);
    const TabularMdp mdp = build_random_mdp(states, actions, uniform_real(rng, 0.4, 1.0), rng(), mo);
    const RewardTable reward = random_table(states, actions, rng());
    const double temperature = uniform_real(rng, 0.1, 2.0);
    SolverOptions so;
    so.entropy_weight = temperature;
    const SoftPolicy reference = soft_value_iteration(mdp, reward, so).policy;
    const SoftPolicy policy = random_policy(mdp, rng());
    const BoundCheck check = theorem2_check(mdp, reward, policy, reference, temperature);

    InstanceOutcome out;
    out.passed = check.holds(1e-8);
    out.values = {{"states", double(states)},          {"actions", double(actions)},
                  {"gamma", mdp.gamma()},              {"temperature", temperature},
                  {"utility_gap", check.utility_gap},  {"own_error", check.own_error},
                  {"own_bound", check.own_bound},      {"ref_error", check.ref_error},
                  {"ref_bound", check.ref_bound}};
    return out;
  });
}

SuiteReport decision_rule_suite(const SuiteOptions& opts) {
  return run_instances("decision-rule", opts, [](std::size_t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t states = uniform_index(rng, 2, 4);
    const TabularMdp mdp = build_random_mdp(states, 2, 1.0, rng());
    std::size_t res = 2;
    while (res < 11 && std::pow(double(res + 1), double(states)) <= 200.0) ++res;
    const PolicyGrid grid = enumerate_policy_grid(mdp, res);
    const auto rewards = random_reward_points(uniform_index(rng, 2, 10), states, 2, rng);
    const DecisionRuleReport r = decision_rule_equivalence(mdp, rewards, grid.policies);

    InstanceOutcome out;
    out.passed = r.agrees;
    out.applicable = !r.degenerate;
    out.values = {{"policies", double(grid.size())},
                  {"rewards", double(rewards.size())},
                  {"argmax_index", double(r.argmax_index)},
                  {"minimax_index", double(r.minimax_index)},
                  {"minimax_value", r.minimax_value},
                  {"argmax_worst_regret", r.argmax_worst_regret},
                  {"totally_dominated", double(r.totally_dominated)},
                  {"agrees_excluding_totally_dominated", r.agrees_excluding_totally_dominated ? 1.0 : 0.0}};
    if (!r.agrees)
      out.note = r.agrees_excluding_totally_dominated ? "argmax is a totally dominated policy"
                                                      : "argmax differs from minimax";
    return out;
  });
}

SuiteReport counting_suite(const SuiteOptions& opts) {
  return run_instances("counting", opts, [](std::size_t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t states = uniform_index(rng, 2, 3);
    const TabularMdp mdp = build_random_mdp(states, 2, 1.0, rng());
    const PolicyGrid grid = enumerate_policy_grid(mdp, 5);
    const RewardTable hidden = random_table(states, 2, rng());

    std::vector<double> utils;
    for (const auto& pi : grid.policies) utils.push_back(policy_utility(mdp, hidden, pi));
    std::vector<double> sorted = utils;
    std::sort(sorted.begin(), sorted.end());
    const double threshold = sorted[static_cast<std::size_t>(uniform_real(rng, 0.5, 0.9) * double(sorted.size()))];
    const TaskSpec task = hidden_utility_task(mdp, hidden, threshold);
    const std::size_t expert_index =
        static_cast<std::size_t>(std::max_element(utils.begin(), utils.end()) - utils.begin());

    auto rewards = random_reward_points(uniform_index(rng, 5, 20), states, 2, rng);
    rewards.push_back({Vector(), hidden});
    const std::size_t accepted = static_cast<std::size_t>(
        std::count_if(utils.begin(), utils.end(), [&](double u) { return u >= threshold; }));
    const std::size_t k = uniform_index(rng, 0, accepted - 1);
    const CountingReport r = theorem1_counting_check(mdp, rewards, grid, task, grid.policies[expert_index], k);

    InstanceOutcome out;
    out.passed = r.holds();
    out.applicable = r.applicable();
    out.values = {{"policies", double(grid.size())},
                  {"k", double(k)},
                  {"kept_rewards", double(r.kept_rewards)},
                  {"accepted_policies", double(r.accepted_policies)},
                  {"premise_policies", double(r.premise_policies.size())},
                  {"counterexamples", double(r.counterexamples.size())}};
    if (!r.counterexamples.empty()) out.note = "premise holds for a rejected policy";
    return out;
  });
}

SuiteReport nested_probe_suite(const SuiteOptions& opts) {
  return run_instances("nested-probe", opts, [](std::size_t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t states = uniform_index(rng, 2, 3);
    const TabularMdp mdp = build_random_mdp(states, 2, 1.0, rng());
    const PolicyGrid grid = enumerate_policy_grid(mdp, 5);
    const RewardTable hidden = random_table(states, 2, rng());
    const RewardTable first = random_table(states, 2, rng());
    // Second reward: a perturbation of the first, so nesting happens often.
    const RewardTable second = first + 0.2 * random_table(states, 2, rng());
    std::vector<double> utils;
    for (const auto& pi : grid.policies) utils.push_back(policy_utility(mdp, hidden, pi));
    std::sort(utils.begin(), utils.end());
    const TaskSpec task = hidden_utility_task(mdp, hidden, utils[utils.size() / 2]);
    const NestedProbe p = prop1_probe(mdp, first, second, task, grid);

    InstanceOutcome out;
    out.applicable = p.nested;
    out.passed = !p.nested || p.witness.has_value();
    out.values = {{"nested", p.nested ? 1.0 : 0.0}};
    if (p.witness) {
      out.values.emplace_back("witness_first", double(p.witness->first));
      out.values.emplace_back("witness_second", double(p.witness->second));
    }
    if (!out.passed) out.note = "nested superlevel sets without a witness pair";
    return out;
  });
}

BenchmarkSettings default_benchmark_settings() {
  BenchmarkSettings s;
  s.config.irl_mode = IrlMode::maxent;
  s.config.antagonist = AntagonistMode::exact;
  s.config.reward_grid_resolution = s.reward_resolution;
  return s;
}

SuiteReport regret_gap_suite(const SuiteOptions& opts, const BenchmarkSettings& settings) {
  return run_instances("regret-gap", opts, [&settings](std::size_t, std::uint64_t seed) {
    const RandomBenchmark b = build_random_benchmark(seed);
    const PagarConfig& base = settings.config;
    auto objective = std::make_shared<IrlObjective>(b.mdp, b.family, b.demos, base.irl_mode, base.irl_fit);
    const auto irl = [objective](const Vector& p) { return (*objective)(p); };

    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (const Vector& p : b.family.grid(settings.reward_resolution)) {
      const double v = irl(p);
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    const double delta = hi - settings.delta_fraction * (hi - lo);
    DeltaRewardSet set(b.family, delta, irl);
    std::vector<RewardPoint> points;
    for (const Vector& p : set.grid_members(settings.reward_resolution)) points.push_back(materialize(b.family, p));

    const PolicyGrid grid = enumerate_policy_grid(b.mdp, settings.policy_resolution);
    const MinimaxResult oracle = minimax_regret_bruteforce(b.mdp, points, grid.policies);

    PagarConfig cfg = base;
    cfg.delta = delta;
    cfg.seed = seed;
    cfg.reward_grid_resolution = settings.reward_resolution;
    const TrainResult trained = train(b.mdp, b.family, irl, b.task, cfg);
    double worst = 0.0;
    for (const auto& pt : points) worst = std::max(worst, regret(b.mdp, pt.table, trained.protagonist));

    const double tol = std::max(settings.relative_tolerance * oracle.worst_regret, settings.absolute_tolerance);
    InstanceOutcome out;
    out.passed = std::abs(worst - oracle.worst_regret) <= tol;
    out.values = {{"delta", delta},
                  {"rewards", double(points.size())},
                  {"policies", double(grid.size())},
                  {"oracle_regret", oracle.worst_regret},
                  {"trained_regret", worst},
                  {"tolerance", tol}};
    if (!out.passed) out.note = "trained worst-case regret outside tolerance";
    return out;
  });
}

std::vector<std::string> suite_names() { return {"bounds", "decision-rule", "counting", "nested-probe"}; }

SuiteReport run_suite(const std::string& name, const SuiteOptions& opts) {
  if (name == "bounds") return bound_suite(opts);
  if (name == "decision-rule") return decision_rule_suite(opts);
  if (name == "counting") return counting_suite(opts);
  if (name == "nested-probe") return nested_probe_suite(opts);
  if (name == "regret-gap") return regret_gap_suite(opts, default_benchmark_settings());
  throw ConfigError("unknown suite '" + name + "'");
}

}  // namespace pagar
