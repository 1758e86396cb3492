#pragma once

// Benchmark MDPs: the two-branch reachability example, seeded random MDPs and
// a slippery reach-avoid gridworld.

#include <cstdint>
#include <vector>

#include "pagar/irl.hpp"
#include "pagar/mdp.hpp"
#include "pagar/reward.hpp"
#include "pagar/task.hpp"

namespace pagar {

struct Example1 {
  // State and action names used across tests and tools.
  static constexpr std::size_t s0 = 0, s1 = 1, s2 = 2, s3 = 3, s4 = 4, s5 = 5, s6 = 6;
  static constexpr std::size_t a1 = 0, a2 = 1;
  static constexpr std::size_t horizon = 5;
  static constexpr double gamma = 0.99;
  // Acceptable range of pi(a2 | s0).
  static constexpr double success_lo = 0.5;
  static constexpr double success_hi = 125.0 / 188.0;

  TabularMdp mdp;
  RewardFamily family;  // params = (omega), r = omega * r1 + (1 - omega) * r2
  TaskSpec task;
  DemoSet demos;  // two trajectories weighted 2:1

  // Policy that picks a2 at s0 with probability p (other states have one action).
  SoftPolicy policy(double p) const;
  static double a2_probability(const SoftPolicy& policy) { return policy.prob(s0, a2); }
};

Example1 build_example1();

struct RandomMdpOptions {
  double gamma = 0.9;
  std::size_t max_resamples = 1000;
};

TabularMdp build_random_mdp(std::size_t n_states, std::size_t n_actions, double density, std::uint64_t seed,
                            const RandomMdpOptions& opts = {});

// Seeded table with entries uniform in [lo, hi).
Table random_table(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0);
// Seeded policy with random finite logits (every action has positive mass).
SoftPolicy random_policy(const TabularMdp& mdp, std::uint64_t seed, double scale = 2.0);

struct Cell {
  std::size_t x = 0;
  std::size_t y = 0;
  bool operator==(const Cell&) const = default;
};

struct GridworldSpec {
  std::size_t width = 5;
  std::size_t height = 5;
  Cell start{0, 0};
  Cell goal{4, 4};
  std::vector<Cell> hazards{{2, 1}, {1, 3}, {3, 3}};
  double slip = 0.1;             // probability of drifting sideways
  std::size_t step_limit = 12;   // moves allowed to reach the goal
  double gamma = 0.95;
  double threshold = 0.7;        // required goal-reach probability
  std::size_t n_demos = 10;
  std::uint64_t demo_seed = 7;
};

struct Gridworld {
  GridworldSpec spec;
  TabularMdp mdp;
  TaskSpec task;
  DemoSet demos;
  RewardTable hidden_reward;  // +1 at the goal, 0 elsewhere
  RewardFamily family;        // goal, hazard and living-reward features
  SoftPolicy demo_policy;     // hard-optimal under the hidden reward

  std::size_t index(Cell c) const { return c.y * spec.width + c.x; }
  double goal_probability(const SoftPolicy& policy) const;
  double hazard_probability(const SoftPolicy& policy) const;
};

Gridworld build_gridworld(const GridworldSpec& spec = {});

// Random instance for solver-vs-oracle comparisons: a random MDP, a random
// affine reward family, demos from the soft-optimal policy of a hidden
// member, and a task accepting policies above the hidden utility midpoint.
struct RandomBenchmarkOptions {
  std::size_t n_states = 4;
  std::size_t n_actions = 2;
  std::size_t param_dim = 2;
  double density = 1.0;
  double gamma = 0.9;
  std::size_t n_demos = 20;
  std::size_t demo_length = 30;
};

struct RandomBenchmark {
  TabularMdp mdp;
  RewardFamily family;  // box [-1, 1]^param_dim
  DemoSet demos;
  Vector hidden_params;
  TaskSpec task;
};

RandomBenchmark build_random_benchmark(std::uint64_t seed, const RandomBenchmarkOptions& opts = {});

}  // namespace pagar
