#include <gtest/gtest.h>

#include "pagar/error.hpp"
#include "pagar/suites.hpp"

using namespace pagar;

namespace {

void expect_same(const InstanceOutcome& a, const InstanceOutcome& b) {
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.passed, b.passed);
  EXPECT_EQ(a.applicable, b.applicable);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.note, b.note);
}

}  // namespace

TEST(InstanceSeed, DistinctAndStable) {
  EXPECT_EQ(instance_seed(1, 2), instance_seed(1, 2));
  EXPECT_NE(instance_seed(1, 2), instance_seed(1, 3));
  EXPECT_NE(instance_seed(1, 2), instance_seed(2, 2));
}

TEST(Suites, DeterministicAcrossRunsAndWorkerCounts) {
  for (const std::string& name : suite_names()) {
    const SuiteReport a = run_suite(name, {.size = 6, .seed = 11, .workers = 1});
    const SuiteReport b = run_suite(name, {.size = 6, .seed = 11, .workers = 3});
    ASSERT_EQ(a.outcomes.size(), 6u) << name;
    for (std::size_t i = 0; i < 6; ++i) expect_same(a.outcomes[i], b.outcomes[i]);
  }
}

TEST(Suites, SingleInstanceReproducesFullRun) {
  for (const std::string& name : suite_names()) {
    const SuiteReport full = run_suite(name, {.size = 5, .seed = 21});
    const SuiteReport one = run_suite(name, {.size = 5, .seed = 21, .only = 3});
    ASSERT_EQ(one.outcomes.size(), 1u) << name;
    expect_same(one.outcomes[0], full.outcomes[3]);
  }
}

TEST(Suites, SizeZeroAndBadIndexRejected) {
  EXPECT_THROW(run_suite("bounds", {.size = 0, .seed = 1}), ConfigError);
  EXPECT_THROW(run_suite("bounds", {.size = 3, .seed = 1, .only = 3}), ConfigError);
  EXPECT_THROW(run_suite("no-such-suite", {.size = 3, .seed = 1}), ConfigError);
}

TEST(Suites, BoundSuitePasses) {
  const SuiteReport r = bound_suite({.size = 20, .seed = 31});
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.applicable(), 20u);
}

TEST(Suites, CountingAndProbeSuitesPass) {
  EXPECT_TRUE(counting_suite({.size = 10, .seed = 41}).passed());
  EXPECT_TRUE(nested_probe_suite({.size = 10, .seed = 42}).passed());
}

TEST(Suites, OutcomeValueLookup) {
  const SuiteReport r = bound_suite({.size = 1, .seed = 51});
  const InstanceOutcome& o = r.outcomes[0];
  ASSERT_FALSE(o.values.empty());
  EXPECT_EQ(o.value(o.values.front().first), o.values.front().second);
  EXPECT_THROW(o.value("missing-key"), InvalidArgument);
}

TEST(Suites, RegretGapOnSmallBenchmark) {
  BenchmarkSettings s = default_benchmark_settings();
  const SuiteReport r = regret_gap_suite({.size = 2, .seed = 61}, s);
  ASSERT_EQ(r.outcomes.size(), 2u);
  for (const auto& o : r.outcomes) {
    EXPECT_GE(o.value("trained_regret"), -1e-9);
    EXPECT_GE(o.value("oracle_regret"), -1e-9);
    EXPECT_TRUE(o.passed) << "instance " << o.index;
  }
}
