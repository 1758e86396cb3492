#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "pagar/envs.hpp"
#include "pagar/error.hpp"
#include "pagar/irl.hpp"
#include "pagar/reward.hpp"

using namespace pagar;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

std::set<std::vector<double>> as_set(const std::vector<Vector>& pts) {
  std::set<std::vector<double>> out;
  for (const Vector& p : pts) out.insert(std::vector<double>(p.data(), p.data() + p.size()));
  return out;
}

}  // namespace

TEST(RewardFamily, ExampleEndpointsAndMidpoint) {
  const Example1 e = build_example1();
  const RewardTable at1 = materialize(e.family, scalar(1.0)).table;
  const RewardTable at0 = materialize(e.family, scalar(0.0)).table;
  const RewardTable half = materialize(e.family, scalar(0.5)).table;
  for (std::size_t s = 0; s < 7; ++s)
    for (std::size_t a = 0; a < 2; ++a) {
      EXPECT_DOUBLE_EQ(at1(s, a), s == Example1::s2 ? 1.0 : 0.0);
      EXPECT_DOUBLE_EQ(at0(s, a), s == Example1::s6 ? 1.0 : 0.0);
    }
  EXPECT_DOUBLE_EQ(half(Example1::s2, 0), 0.5);
  EXPECT_DOUBLE_EQ(half(Example1::s6, 0), 0.5);
  EXPECT_DOUBLE_EQ(half(Example1::s0, 0), 0.0);
}

TEST(RewardFamily, AffineInParameters) {
  const RandomBenchmark b = build_random_benchmark(3, {.param_dim = 3});
  Vector p(3), q(3);
  p << 0.2, -0.5, 0.9;
  q << -0.7, 0.1, 0.3;
  const double t = 0.35;
  const RewardTable mix = b.family.table(t * p + (1 - t) * q);
  EXPECT_LT((mix - (t * b.family.table(p) + (1 - t) * b.family.table(q))).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RewardFamily, OutOfBoxRejected) {
  const Example1 e = build_example1();
  EXPECT_THROW(materialize(e.family, scalar(1.5)), InvalidArgument);
  EXPECT_THROW(materialize(e.family, scalar(-0.01)), InvalidArgument);
  EXPECT_THROW(materialize(e.family, Vector::Zero(2)), InvalidArgument);
}

TEST(RewardFamily, ProjectClampsToBox) {
  const Example1 e = build_example1();
  EXPECT_DOUBLE_EQ(e.family.project(scalar(3.0))(0), 1.0);
  EXPECT_DOUBLE_EQ(e.family.project(scalar(-3.0))(0), 0.0);
  EXPECT_DOUBLE_EQ(e.family.center()(0), 0.5);
}

TEST(RewardFamily, GridCoversBoxCorners) {
  const RandomBenchmark b = build_random_benchmark(4, {.param_dim = 2});
  const auto g = b.family.grid(5);
  EXPECT_EQ(g.size(), 25u);
  for (const Vector& p : g) EXPECT_TRUE(b.family.contains(p));
  EXPECT_DOUBLE_EQ(g.front()(0), -1.0);
  EXPECT_DOUBLE_EQ(g.back()(1), 1.0);
}

TEST(RewardFamily, MismatchedShapesRejected) {
  EXPECT_THROW(RewardFamily({Table::Zero(2, 2), Table::Zero(3, 2)}, {Interval{}, Interval{}}), InvalidArgument);
  EXPECT_THROW(RewardFamily({Table::Zero(2, 2)}, {}), InvalidArgument);
  EXPECT_THROW(RewardFamily({Table::Zero(2, 2)}, {Interval{1.0, 0.0}}), InvalidArgument);
}

TEST(DeltaRewardSet, MembershipAtExampleAnchor) {
  const Example1 e = build_example1();
  const IrlObjective j(e.mdp, e.family, e.demos, IrlMode::trajectory);
  const double jmax = j(scalar(1.0));
  DeltaRewardSet set(e.family, jmax, [&](const Vector& p) { return j(p); });
  EXPECT_TRUE(set.membership(scalar(1.0)).member);
  EXPECT_FALSE(set.membership(scalar(0.0)).member);
  EXPECT_NEAR(set.membership(scalar(1.0)).margin, 0.0, 1e-12);
}

TEST(DeltaRewardSet, GridMembersAreNestedInDelta) {
  const Example1 e = build_example1();
  const IrlObjective j(e.mdp, e.family, e.demos, IrlMode::trajectory);
  auto f = [&](const Vector& p) { return j(p); };
  std::set<std::vector<double>> previous;
  bool first = true;
  for (double delta : {3.0, 2.5, 2.0, 1.0, 0.0, -5.0}) {
    DeltaRewardSet set(e.family, delta, f);
    const auto members = as_set(set.grid_members(101));
    if (!first) {
      EXPECT_TRUE(std::includes(members.begin(), members.end(), previous.begin(), previous.end()))
          << "delta " << delta;
      EXPECT_GE(members.size(), previous.size());
    }
    previous = members;
    first = false;
  }
}

TEST(DeltaRewardSet, GridMembersSortedAndCached) {
  const RandomBenchmark b = build_random_benchmark(6, {.param_dim = 2});
  std::size_t calls = 0;
  DeltaRewardSet set(b.family, 0.0, [&](const Vector& p) {
    ++calls;
    return p.sum();
  });
  const auto& m = set.grid_members(11);
  const std::size_t after_first = calls;
  EXPECT_TRUE(std::is_sorted(m.begin(), m.end(), [](const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  }));
  for (const Vector& p : m) EXPECT_GE(p.sum(), -1e-6);
  set.grid_members(11);
  EXPECT_EQ(calls, after_first);
}

TEST(DeltaRewardSet, HighDimensionalGridGuarded) {
  const RandomBenchmark b = build_random_benchmark(7, {.param_dim = 4});
  DeltaRewardSet set(b.family, 0.0, [](const Vector&) { return 1.0; });
  EXPECT_THROW(set.grid_members(3), GuardViolation);
}
