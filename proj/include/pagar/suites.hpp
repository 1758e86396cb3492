#pragma once

// Seeded randomized verification suites built on the exhaustive oracles.
// Every instance derives its own seed from (suite seed, index), so a single
// instance can be rerun in isolation and reproduces its outcome exactly.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pagar/solver.hpp"

namespace pagar {

struct SuiteOptions {
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> only;  // run this instance index alone
  std::size_t workers = 1;
};

struct InstanceOutcome {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool passed = false;
  bool applicable = true;  // the premises of the checked statement hold
  std::vector<std::pair<std::string, double>> values;
  std::string note;

  double value(const std::string& key) const;
};

struct SuiteReport {
  std::string name;
  std::vector<InstanceOutcome> outcomes;
  double seconds = 0.0;

  std::size_t failures() const;
  std::size_t applicable() const;
  bool passed() const { return failures() == 0; }
};

std::uint64_t instance_seed(std::uint64_t suite_seed, std::size_t index);

// Performance-difference bounds for a random policy against the soft-optimal
// one on random MDPs (at most 6 states, 3 actions, gamma at most 0.95).
SuiteReport bound_suite(const SuiteOptions& opts);
// Mixture decision rule versus exhaustive minimax regret (at most 10 rewards,
// 200 policies).
SuiteReport decision_rule_suite(const SuiteOptions& opts);
// Counting acceptance theorem on fully enumerated instances.
SuiteReport counting_suite(const SuiteOptions& opts);
// Nested-superlevel-set probe.
SuiteReport nested_probe_suite(const SuiteOptions& opts);

// Solver-vs-oracle regret gap on random benchmarks: train() against the
// exhaustive minimax over the grid members of the delta-set.
struct BenchmarkSettings {
  PagarConfig config;               // delta and seed are set per instance
  double delta_fraction = 0.3;      // delta = max - fraction * (max - min) over the reward grid
  std::size_t reward_resolution = 21;
  std::size_t policy_resolution = 11;
  double relative_tolerance = 0.1;
  double absolute_tolerance = 0.02;
};

BenchmarkSettings default_benchmark_settings();
SuiteReport regret_gap_suite(const SuiteOptions& opts, const BenchmarkSettings& settings);

std::vector<std::string> suite_names();
SuiteReport run_suite(const std::string& name, const SuiteOptions& opts);

}  // namespace pagar
