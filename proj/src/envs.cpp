#include "pagar/envs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <random>

#include "pagar/error.hpp"

namespace pagar {

namespace {

void set_row(Table& t, std::size_t s, std::size_t a, std::size_t n_actions, std::initializer_list<std::pair<std::size_t, double>> entries) {
  auto row = t.row(static_cast<Eigen::Index>(s * n_actions + a));
  row.setZero();
  for (auto [next, p] : entries) row(static_cast<Eigen::Index>(next)) += p;
}

// States reachable from the initial support in at most n_states steps.
std::vector<bool> reachable(const TabularMdp& mdp) {
  std::vector<bool> seen(mdp.n_states(), false);
  std::deque<std::size_t> frontier;
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    if (mdp.initial()(s) > 0.0) {
      seen[s] = true;
      frontier.push_back(s);
    }
  while (!frontier.empty()) {
    const std::size_t s = frontier.front();
    frontier.pop_front();
    if (mdp.terminal(s)) continue;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      if (!mdp.available(s, a)) continue;
      for (std::size_t n = 0; n < mdp.n_states(); ++n)
        if (mdp.prob(s, a, n) > 0.0 && !seen[n]) {
          seen[n] = true;
          frontier.push_back(n);
        }
    }
  }
  return seen;
}

}  // namespace

SoftPolicy Example1::policy(double p) const {
  require(p >= 0.0 && p <= 1.0, "probability outside [0, 1]");
  Table probs = Table::Zero(mdp.n_states(), mdp.n_actions());
  probs.col(a1).setOnes();
  probs(s0, a1) = 1.0 - p;
  probs(s0, a2) = p;
  return SoftPolicy::from_probabilities(probs);
}

Example1 build_example1() {
  constexpr std::size_t n = 7, k = 2;
  using E = Example1;
  Table t = Table::Zero(n * k, n);
  set_row(t, E::s0, E::a1, k, {{E::s1, 1.0}});
  set_row(t, E::s0, E::a2, k, {{E::s2, 1.0}});
  set_row(t, E::s1, E::a1, k, {{E::s6, 1.0}});
  set_row(t, E::s2, E::a1, k, {{E::s2, 0.2}, {E::s6, 0.2}, {E::s3, 0.6}});
  for (std::size_t s : {E::s3, E::s4, E::s5, E::s6}) set_row(t, s, E::a1, k, {{s, 1.0}});
  // Only s0 offers a choice; the second action elsewhere mirrors the first.
  std::vector<bool> available(n * k, false);
  for (std::size_t s = 0; s < n; ++s) {
    available[s * k + E::a1] = true;
    if (s != E::s0) t.row(static_cast<Eigen::Index>(s * k + E::a2)) = t.row(static_cast<Eigen::Index>(s * k + E::a1));
  }
  available[E::s0 * k + E::a2] = true;

  Vector init = Vector::Zero(n);
  init(E::s0) = 1.0;
  std::vector<bool> terminal(n, false);
  terminal[E::s3] = terminal[E::s6] = true;
  TabularMdp mdp(n, k, std::move(t), std::move(init), std::move(terminal), E::gamma, E::horizon, std::move(available));

  Table r1 = Table::Zero(n, k);
  Table r2 = Table::Zero(n, k);
  r1.row(E::s2).setOnes();
  r2.row(E::s6).setOnes();
  RewardFamily family({r1 - r2}, {Interval{0.0, 1.0}}, r2);

  TaskSpec task;
  task.name = "visit s2 and s6 with probability >= 0.5 within 5 steps";
  auto mdp_copy = std::make_shared<TabularMdp>(mdp);
  auto p2 = [mdp_copy](const SoftPolicy& pi) { return visit_probability(*mdp_copy, pi, E::s2, E::horizon); };
  auto p6 = [mdp_copy](const SoftPolicy& pi) { return visit_probability(*mdp_copy, pi, E::s6, E::horizon); };
  task.score = [p2, p6](const SoftPolicy& pi) { return std::min(p2(pi), p6(pi)) - 0.5; };
  task.accepts = [score = task.score](const SoftPolicy& pi) { return score(pi) >= 0.0; };
  task.metrics = {{"prob_s2", p2}, {"prob_s6", p6}, {"pi_a2_s0", [](const SoftPolicy& pi) { return pi.prob(E::s0, E::a2); }}};

  // Reconstructed demonstrations: both choose a2 and end in s6. The long
  // stay in s2 counts twice; with equal weights the likelihood peaks near
  // omega = 0.95 instead of at the boundary.
  DemoSet demos({Trajectory{{{E::s0, E::a2}, {E::s2, E::a1}, {E::s2, E::a1}, {E::s2, E::a1}, {E::s6, E::a1}}},
                 Trajectory{{{E::s0, E::a2}, {E::s2, E::a1}, {E::s6, E::a1}}}},
                {2.0, 1.0});
  return Example1{std::move(mdp), std::move(family), std::move(task), std::move(demos)};
}

Table random_table(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  Table t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = lo + (hi - lo) * unit_from_bits(rng());
  return t;
}

SoftPolicy random_policy(const TabularMdp& mdp, std::uint64_t seed, double scale) {
  Table logits = random_table(mdp.n_states(), mdp.n_actions(), seed, -scale, scale);
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      if (!mdp.available(s, a)) logits(s, a) = -std::numeric_limits<double>::infinity();
  return SoftPolicy(std::move(logits));
}

TabularMdp build_random_mdp(std::size_t n_states, std::size_t n_actions, double density, std::uint64_t seed,
                            const RandomMdpOptions& opts) {
  require(n_states >= 2 && n_actions >= 2, "random MDP needs at least 2 states and 2 actions");
  require(density > 0.0 && density <= 1.0, "density must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  for (std::size_t attempt = 0; attempt <= opts.max_resamples; ++attempt) {
    Table t = Table::Zero(n_states * n_actions, n_states);
    for (Eigen::Index row = 0; row < t.rows(); ++row) {
      // Sparse support, exponential weights: a Dirichlet(1) draw on the support.
      std::vector<std::size_t> support;
      for (std::size_t s = 0; s < n_states; ++s)
        if (unit_from_bits(rng()) < density) support.push_back(s);
      if (support.empty()) support.push_back(static_cast<std::size_t>(unit_from_bits(rng()) * n_states) % n_states);
      double total = 0.0;
      for (std::size_t s : support) {
        const double w = -std::log1p(-unit_from_bits(rng())) + 1e-3;
        t(row, static_cast<Eigen::Index>(s)) = w;
        total += w;
      }
      t.row(row) /= total;
      // Renormalize exactly so the row sums to one within rounding.
      t.row(row) /= t.row(row).sum();
    }
    Vector init = Vector::Zero(n_states);
    init(0) = 1.0;
    TabularMdp mdp(n_states, n_actions, std::move(t), std::move(init), std::vector<bool>(n_states, false), opts.gamma);
    const auto seen = reachable(mdp);
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return mdp;
  }
  throw InvalidArgument("could not sample a fully reachable random MDP");
}

double Gridworld::goal_probability(const SoftPolicy& policy) const {
  return visit_probability(mdp, policy, index(spec.goal), spec.step_limit + 1);
}

double Gridworld::hazard_probability(const SoftPolicy& policy) const {
  // Hazards are terminal, so reaching one excludes the others.
  double p = 0.0;
  for (const Cell& h : spec.hazards) p += visit_probability(mdp, policy, index(h), spec.step_limit + 1);
  return p;
}

Gridworld build_gridworld(const GridworldSpec& spec) {
  require(spec.width >= 2 && spec.height >= 1, "gridworld too small");
  require(spec.slip >= 0.0 && spec.slip < 1.0, "slip must lie in [0, 1)");
  auto inside = [&](Cell c) { return c.x < spec.width && c.y < spec.height; };
  require(inside(spec.start) && inside(spec.goal), "start and goal must lie inside the grid");
  for (const Cell& h : spec.hazards) {
    require(inside(h), "hazard outside the grid");
    require(!(h == spec.goal) && !(h == spec.start), "hazard overlaps start or goal");
  }

  const std::size_t n = spec.width * spec.height;
  constexpr std::size_t k = 4;  // up, right, down, left
  constexpr long dx[k] = {0, 1, 0, -1};
  constexpr long dy[k] = {1, 0, -1, 0};
  auto idx = [&](Cell c) { return c.y * spec.width + c.x; };
  auto move = [&](Cell c, std::size_t dir) {
    const long nx = static_cast<long>(c.x) + dx[dir];
    const long ny = static_cast<long>(c.y) + dy[dir];
    if (nx < 0 || ny < 0 || nx >= static_cast<long>(spec.width) || ny >= static_cast<long>(spec.height)) return c;
    return Cell{static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)};
  };

  std::vector<bool> terminal(n, false);
  terminal[idx(spec.goal)] = true;
  for (const Cell& h : spec.hazards) terminal[idx(h)] = true;

  Table t = Table::Zero(n * k, n);
  for (std::size_t y = 0; y < spec.height; ++y)
    for (std::size_t x = 0; x < spec.width; ++x) {
      const Cell c{x, y};
      const std::size_t s = idx(c);
      for (std::size_t a = 0; a < k; ++a) {
        auto row = t.row(static_cast<Eigen::Index>(s * k + a));
        if (terminal[s]) {
          row(s) = 1.0;
          continue;
        }
        row(idx(move(c, a))) += 1.0 - spec.slip;
        row(idx(move(c, (a + 1) % k))) += 0.5 * spec.slip;
        row(idx(move(c, (a + 3) % k))) += 0.5 * spec.slip;
      }
    }
  Vector init = Vector::Zero(n);
  init(idx(spec.start)) = 1.0;
  TabularMdp mdp(n, k, std::move(t), std::move(init), terminal, spec.gamma);

  if (!reachable(mdp)[idx(spec.goal)]) throw InvalidArgument("goal is unreachable from the start cell");

  Table goal = Table::Zero(n, k);
  Table hazard = Table::Zero(n, k);
  Table living = Table::Zero(n, k);
  goal.row(idx(spec.goal)).setOnes();
  for (const Cell& h : spec.hazards) hazard.row(idx(h)).setOnes();
  for (std::size_t s = 0; s < n; ++s)
    if (!terminal[s]) living.row(s).setOnes();
  RewardFamily family({goal, hazard, living}, {Interval{0.0, 1.0}, Interval{-1.0, 0.0}, Interval{-0.1, 0.1}});

  const SoftPolicy demo_policy = hard_value_iteration(mdp, goal).policy;

  Gridworld g{spec, mdp, TaskSpec{}, {}, goal, std::move(family), demo_policy};
  g.demos = DemoSet(sample_trajectories(mdp, demo_policy, spec.n_demos, spec.step_limit + 1, spec.demo_seed));

  auto world = std::make_shared<Gridworld>(g);
  auto reach = [world](const SoftPolicy& pi) { return world->goal_probability(pi); };
  auto hazard_p = [world](const SoftPolicy& pi) { return world->hazard_probability(pi); };
  const double thr = spec.threshold;
  g.task.name = "reach goal within step limit, avoid hazards";
  g.task.score = [reach, hazard_p, thr](const SoftPolicy& pi) {
    return std::min(reach(pi) - thr, (1.0 - thr) - hazard_p(pi));
  };
  g.task.accepts = [score = g.task.score](const SoftPolicy& pi) { return score(pi) >= 0.0; };
  g.task.metrics = {{"goal_reach", reach}, {"hazard", hazard_p}};
  return g;
}

RandomBenchmark build_random_benchmark(std::uint64_t seed, const RandomBenchmarkOptions& opts) {
  require(opts.param_dim >= 1, "benchmark needs at least one reward parameter");
  std::mt19937_64 rng(seed);
  RandomMdpOptions mdp_opts;
  mdp_opts.gamma = opts.gamma;
  TabularMdp mdp = build_random_mdp(opts.n_states, opts.n_actions, opts.density, rng(), mdp_opts);

  std::vector<Table> features;
  for (std::size_t i = 0; i < opts.param_dim; ++i) features.push_back(random_table(opts.n_states, opts.n_actions, rng()));
  RewardFamily family(std::move(features), std::vector<Interval>(opts.param_dim, Interval{-1.0, 1.0}));

  Vector hidden(static_cast<Eigen::Index>(opts.param_dim));
  for (Eigen::Index i = 0; i < hidden.size(); ++i) hidden(i) = 2.0 * unit_from_bits(rng()) - 1.0;
  const RewardTable hidden_reward = family.table(hidden);
  const SoftPolicy expert = soft_value_iteration(mdp, hidden_reward).policy;
  DemoSet demos(sample_trajectories(mdp, expert, opts.n_demos, opts.demo_length, rng()));

  const double best = hard_value_iteration(mdp, hidden_reward).start_value;
  const double worst = -hard_value_iteration(mdp, -hidden_reward).start_value;
  const double midpoint = 0.5 * (best + worst);
  auto shared = std::make_shared<TabularMdp>(mdp);
  auto hidden_table = std::make_shared<RewardTable>(hidden_reward);
  TaskSpec task;
  task.name = "random-benchmark";
  task.score = [shared, hidden_table, midpoint](const SoftPolicy& pi) {
    return policy_utility(*shared, *hidden_table, pi) - midpoint;
  };
  task.accepts = [score = task.score](const SoftPolicy& pi) { return score(pi) >= 0.0; };
  task.metrics = {{"hidden_utility", [shared, hidden_table](const SoftPolicy& pi) {
                     return policy_utility(*shared, *hidden_table, pi);
                   }}};
  return RandomBenchmark{std::move(mdp), std::move(family), std::move(demos), std::move(hidden), std::move(task)};
}

}  // namespace pagar
