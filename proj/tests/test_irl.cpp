#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "pagar/envs.hpp"
#include "pagar/error.hpp"
#include "pagar/irl.hpp"

using namespace pagar;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

// Deterministic chain 0 -> 1 -> 2 -> 2 with two actions that both advance.
TabularMdp two_action_chain(std::optional<std::size_t> horizon) {
  Table t = Table::Zero(6, 3);
  t(0, 1) = t(1, 1) = 1;
  t(2, 2) = t(3, 2) = 1;
  t(4, 2) = t(5, 2) = 1;
  Vector init = Vector::Zero(3);
  init(0) = 1;
  return TabularMdp(3, 2, t, init, {false, false, false}, 0.9, horizon);
}

double discounted(const TabularMdp& mdp, const RewardTable& r, const Trajectory& tr) {
  double g = 0.0, disc = 1.0;
  for (const Step& st : tr.steps) {
    g += disc * r(st.state, st.action);
    disc *= mdp.gamma();
  }
  return g;
}

// Independent log-likelihood: enumerate every feasible path of at most
// `horizon` states (stopping at terminals), each acting in its last state.
double loglik_oracle(const TabularMdp& mdp, const RewardTable& r, const DemoSet& demos, std::size_t horizon) {
  std::vector<double> scores;
  Trajectory prefix;
  std::function<void(std::size_t, double)> go = [&](std::size_t s, double log_dyn) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      if (!mdp.available(s, a)) continue;
      prefix.steps.push_back({s, a});
      if (mdp.terminal(s) || prefix.size() == horizon) {
        scores.push_back(discounted(mdp, r, prefix) + log_dyn);
      } else {
        for (std::size_t n = 0; n < mdp.n_states(); ++n)
          if (mdp.prob(s, a, n) > 0.0) go(n, log_dyn + std::log(mdp.prob(s, a, n)));
      }
      prefix.steps.pop_back();
    }
  };
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    if (mdp.initial()(s) > 0.0) go(s, std::log(mdp.initial()(s)));
  double m = scores.front();
  for (double x : scores) m = std::max(m, x);
  double z = 0.0;
  for (double x : scores) z += std::exp(x - m);
  const double log_z = m + std::log(z);

  double total = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    const Trajectory& d = demos.trajectories[i];
    double log_dyn = std::log(mdp.initial()(d.steps.front().state));
    for (std::size_t t = 0; t + 1 < d.size(); ++t)
      log_dyn += std::log(mdp.prob(d.steps[t].state, d.steps[t].action, d.steps[t + 1].state));
    total += demos.weight(i) * (discounted(mdp, r, d) + log_dyn - log_z);
    wsum += demos.weight(i);
  }
  return total / wsum;
}

}  // namespace

TEST(DemoUtility, ExampleClosedForm) {
  const Example1 e = build_example1();
  const RewardTable r = materialize(e.family, scalar(1.0)).table;
  const double g = Example1::gamma;
  EXPECT_NEAR(demo_utility(e.mdp, r, e.demos), (2 * (g + g * g + g * g * g) + g) / 3.0, 1e-12);
}

TEST(DemoSet, RejectsEmptyAndBadWeights) {
  EXPECT_THROW(DemoSet(std::vector<Trajectory>{}), InvalidArgument);
  const Trajectory tr{{{0, 0}}};
  EXPECT_THROW(DemoSet({tr}, {-1.0}), InvalidArgument);
  EXPECT_THROW(DemoSet({tr, tr}, {1.0}), InvalidArgument);
}

TEST(DemoSet, ValidateCatchesInfeasibleTransition) {
  const Example1 e = build_example1();
  const DemoSet bad({Trajectory{{{Example1::s0, Example1::a1}, {Example1::s2, Example1::a1}}}});
  EXPECT_THROW(bad.validate(e.mdp), InvalidArgument);
}

TEST(IrlLoss, MarginIsZeroForOptimalDemos) {
  const TabularMdp mdp = two_action_chain(3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RewardTable r = random_table(3, 2, seed);
    const HardSolution opt = hard_value_iteration(mdp, r);
    const DemoSet demos(sample_trajectories(mdp, opt.policy, 1, 3, seed));
    EXPECT_NEAR(irl_loss(mdp, r, demos, IrlMode::margin), 0.0, 1e-12);
  }
}

TEST(IrlLoss, MarginNeverPositive) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TabularMdp mdp = build_random_mdp(4, 2, 0.7, seed).with_horizon(5);
    const RewardTable r = random_table(4, 2, seed + 1);
    const DemoSet demos(sample_trajectories(mdp, random_policy(mdp, seed + 2), 5, 5, seed + 3));
    EXPECT_LE(irl_loss(mdp, r, demos, IrlMode::margin), 1e-12);
  }
}

TEST(IrlLoss, MaxentZeroRewardIsNegatedMaxEntropy) {
  const TabularMdp mdp = build_random_mdp(4, 3, 1.0, 8);
  const DemoSet demos(sample_trajectories(mdp, SoftPolicy::uniform(mdp), 3, 20, 9));
  EXPECT_NEAR(irl_loss(mdp, RewardTable::Zero(4, 3), demos, IrlMode::maxent),
              -std::log(3.0) / (1.0 - mdp.gamma()), 1e-8);
}

TEST(IrlLoss, MaxentBelowMargin) {
  const TabularMdp mdp = build_random_mdp(3, 2, 1.0, 10);
  const RewardTable r = random_table(3, 2, 11);
  const DemoSet demos(sample_trajectories(mdp, random_policy(mdp, 12), 4, 30, 13));
  EXPECT_LT(irl_loss(mdp, r, demos, IrlMode::maxent), irl_loss(mdp, r, demos, IrlMode::margin));
}

TEST(TrajectoryLoglik, SinglePathHasZeroLoglik) {
  Table t = Table::Zero(2, 2);
  t(0, 1) = 1;
  t(1, 1) = 1;
  Vector init(2);
  init << 1, 0;
  const TabularMdp mdp(2, 1, t, init, {false, false}, 0.9, 3);
  const DemoSet demos({Trajectory{{{0, 0}, {1, 0}, {1, 0}}}});
  EXPECT_NEAR(trajectory_maxent_loglik(mdp, random_table(2, 1, 3), demos, 3), 0.0, 1e-12);
}

TEST(TrajectoryLoglik, MatchesEnumerationOracle) {
  const Example1 e = build_example1();
  for (double w : {0.0, 0.3, 0.7, 1.0}) {
    const RewardTable r = materialize(e.family, scalar(w)).table;
    EXPECT_NEAR(trajectory_maxent_loglik(e.mdp, r, e.demos, 5), loglik_oracle(e.mdp, r, e.demos, 5), 1e-10);
  }
  const TabularMdp mdp = build_random_mdp(3, 2, 0.6, 14).with_horizon(4);
  const RewardTable r = random_table(3, 2, 15);
  const DemoSet demos(sample_trajectories(mdp, random_policy(mdp, 16), 6, 4, 17));
  EXPECT_NEAR(trajectory_maxent_loglik(mdp, r, demos, 4), loglik_oracle(mdp, r, demos, 4), 1e-10);
}

TEST(TrajectoryLoglik, InvariantToConstantShiftWithEqualLengths) {
  const TabularMdp mdp = build_random_mdp(3, 2, 0.8, 18).with_horizon(4);
  const RewardTable r = random_table(3, 2, 19);
  const DemoSet demos(sample_trajectories(mdp, random_policy(mdp, 20), 5, 4, 21));
  const double base = trajectory_maxent_loglik(mdp, r, demos, 4);
  EXPECT_NEAR(trajectory_maxent_loglik(mdp, (r.array() + 0.7).matrix(), demos, 4), base, 1e-10);
}

TEST(EnumerateTrajectories, GuardTrips) {
  const TabularMdp mdp = build_random_mdp(6, 3, 1.0, 22);
  EXPECT_THROW(enumerate_trajectories(mdp, 12), GuardViolation);
}

TEST(IrlObjective, TrajectoryModeNeedsFiniteHorizon) {
  const RandomBenchmark b = build_random_benchmark(23);
  EXPECT_THROW(IrlObjective(b.mdp, b.family, b.demos, IrlMode::trajectory), InvalidArgument);
}

TEST(IrlObjective, AnchorMakesMaximumTheBestNll) {
  const Example1 e = build_example1();
  const IrlObjective j(e.mdp, e.family, e.demos, IrlMode::trajectory);
  const RewardTable r1 = materialize(e.family, scalar(1.0)).table;
  EXPECT_NEAR(j(scalar(1.0)), -trajectory_maxent_loglik(e.mdp, r1, e.demos, 5), 1e-9);
  for (double w = 0.0; w <= 1.0; w += 0.05) EXPECT_LE(j(scalar(w)), j(scalar(1.0)) + 1e-12);
}

TEST(IrlFit, ExampleArgmaxAtUpperEnd) {
  const Example1 e = build_example1();
  const IrlReport rep = irl_fit(e.mdp, e.family, e.demos, IrlMode::trajectory);
  EXPECT_NEAR(rep.best_params(0), 1.0, 0.01);
  EXPECT_TRUE(rep.converged);
  const IrlObjective j(e.mdp, e.family, e.demos, IrlMode::trajectory);
  EXPECT_NEAR(rep.best_loss, j(scalar(1.0)), 1e-9);
}

TEST(IrlFit, AtLeastAsGoodAsDenseGrid) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const RandomBenchmark b = build_random_benchmark(seed);
    const IrlObjective j(b.mdp, b.family, b.demos, IrlMode::maxent);
    double grid_best = -1e300;
    for (const Vector& p : b.family.grid(41)) grid_best = std::max(grid_best, j(p));
    FitOptions opts;
    opts.grid_resolution = 11;
    const IrlReport rep = irl_fit(b.mdp, b.family, b.demos, IrlMode::maxent, opts);
    EXPECT_GE(rep.best_loss, grid_best - 1e-6) << "seed " << seed;
    EXPECT_TRUE(b.family.contains(rep.best_params));
  }
}

TEST(IrlFit, Deterministic) {
  const RandomBenchmark b = build_random_benchmark(24);
  FitOptions opts;
  opts.grid_resolution = 11;
  const IrlReport a = irl_fit(b.mdp, b.family, b.demos, IrlMode::maxent, opts);
  const IrlReport c = irl_fit(b.mdp, b.family, b.demos, IrlMode::maxent, opts);
  EXPECT_EQ(a.best_params, c.best_params);
  EXPECT_EQ(a.best_loss, c.best_loss);
}

TEST(IrlMode, StringRoundTrip) {
  for (IrlMode m : {IrlMode::margin, IrlMode::maxent, IrlMode::trajectory})
    EXPECT_EQ(irl_mode_from_string(to_string(m)), m);
  EXPECT_THROW(irl_mode_from_string("bogus"), InvalidArgument);
}
