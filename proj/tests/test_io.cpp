#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "pagar/envs.hpp"
#include "pagar/error.hpp"
#include "pagar/io.hpp"

using namespace pagar;

TEST(MdpFile, RoundTripPreservesEverything) {
  const Example1 e = build_example1();
  std::stringstream ss;
  write_mdp(ss, e.mdp);
  const TabularMdp back = read_mdp(ss);
  EXPECT_EQ(back.transition(), e.mdp.transition());
  EXPECT_EQ(back.initial(), e.mdp.initial());
  EXPECT_EQ(back.terminal_mask(), e.mdp.terminal_mask());
  EXPECT_EQ(back.availability(), e.mdp.availability());
  EXPECT_EQ(back.horizon(), e.mdp.horizon());
  EXPECT_EQ(back.gamma(), e.mdp.gamma());
}

TEST(MdpFile, RandomMdpRoundTripIsBitExact) {
  const TabularMdp mdp = build_random_mdp(5, 3, 0.6, 9);
  std::stringstream ss;
  write_mdp(ss, mdp);
  const TabularMdp back = read_mdp(ss);
  EXPECT_EQ(back.transition(), mdp.transition());
  EXPECT_FALSE(back.finite_horizon());
}

TEST(MdpFile, CommentsAndBlankLinesIgnored) {
  std::istringstream in(
      "# tiny\nstates 1\nactions 1\n\ngamma 0.5\nhorizon none\ninitial 1\ntransition\n1  # self loop\n");
  const TabularMdp mdp = read_mdp(in);
  EXPECT_EQ(mdp.n_states(), 1u);
  EXPECT_DOUBLE_EQ(mdp.gamma(), 0.5);
}

TEST(MdpFile, RejectsMalformedInput) {
  std::istringstream unknown("states 1\nactions 1\ngamma 0.5\nbogus 3\n");
  EXPECT_THROW(read_mdp(unknown), InvalidArgument);
  std::istringstream truncated("states 2\nactions 1\ngamma 0.5\nhorizon none\ninitial 1 0\ntransition\n0 1\n");
  EXPECT_THROW(read_mdp(truncated), InvalidArgument);
  std::istringstream not_stochastic("states 1\nactions 1\ngamma 0.5\nhorizon none\ninitial 1\ntransition\n0.5\n");
  EXPECT_THROW(read_mdp(not_stochastic), InvalidArgument);
}

TEST(Matrix, RoundTripIsBitExact) {
  const Table m = random_table(3, 4, 5, -1e3, 1e3);
  std::stringstream ss;
  write_matrix(ss, m);
  EXPECT_EQ(read_matrix(ss), m);
}

TEST(Matrix, InfiniteLogitsSurvive) {
  Table m(1, 2);
  m << 0.25, -std::numeric_limits<double>::infinity();
  std::stringstream ss;
  write_matrix(ss, m);
  EXPECT_EQ(read_matrix(ss), m);
}

TEST(Demos, RoundTripKeepsStatesActionsAndWeights) {
  const Example1 e = build_example1();
  std::stringstream ss;
  write_demos(ss, e.demos);
  const DemoSet back = read_demos(ss);
  ASSERT_EQ(back.size(), e.demos.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_DOUBLE_EQ(back.weight(i), e.demos.weight(i));
    ASSERT_EQ(back.trajectories[i].size(), e.demos.trajectories[i].size());
    for (std::size_t t = 0; t < back.trajectories[i].size(); ++t) {
      EXPECT_EQ(back.trajectories[i].steps[t].state, e.demos.trajectories[i].steps[t].state);
      EXPECT_EQ(back.trajectories[i].steps[t].action, e.demos.trajectories[i].steps[t].action);
    }
  }
}

TEST(Demos, TrailingStateWithoutAction) {
  std::istringstream in("0 1 2\n");
  const DemoSet d = read_demos(in);
  ASSERT_EQ(d.trajectories[0].size(), 2u);
  EXPECT_EQ(d.trajectories[0].steps[1].state, 2u);
  EXPECT_EQ(d.trajectories[0].steps[1].action, kNoAction);
}

TEST(Demos, RejectsGarbage) {
  std::istringstream bad("0 x 1\n");
  EXPECT_THROW(read_demos(bad), InvalidArgument);
  std::istringstream negative("0 -1\n");
  EXPECT_THROW(read_demos(negative), InvalidArgument);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(read_demos(empty), InvalidArgument);
}

TEST(Config, ParsesTypedValues) {
  std::istringstream in(
      "seed = 42\n# comment\npagar.delta = 1.5\nsweep.omega = 0, 0.5, 1\nenv.name = example1\npagar.use_r3 = true\n");
  const Config cfg = Config::parse(in);
  EXPECT_EQ(cfg.get_u64("seed", 0), 42u);
  EXPECT_DOUBLE_EQ(cfg.get_double("pagar.delta", 0.0), 1.5);
  EXPECT_EQ(cfg.get_list("sweep.omega", {}), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(cfg.get_string("env.name", ""), "example1");
  EXPECT_TRUE(cfg.get_bool("pagar.use_r3", false));
  EXPECT_DOUBLE_EQ(cfg.get_double("pagar.mu", 0.25), 0.25);
  EXPECT_TRUE(cfg.unused().empty());
}

TEST(Config, DuplicateAndUnknownKeysRejected) {
  std::istringstream dup("seed = 1\nseed = 2\n");
  EXPECT_THROW(Config::parse(dup), ConfigError);
  std::istringstream unknown("colour = blue\n");
  EXPECT_THROW(Config::parse(unknown), ConfigError);
  std::istringstream no_eq("seed 1\n");
  EXPECT_THROW(Config::parse(no_eq), ConfigError);
}

TEST(Config, TypeErrorsAreConfigErrors) {
  std::istringstream in("seed = -3\npagar.delta = abc\npagar.use_r3 = maybe\nsweep.omega = 1,,2\n");
  const Config cfg = Config::parse(in);
  EXPECT_THROW(cfg.get_u64("seed", 0), ConfigError);
  EXPECT_THROW(cfg.get_double("pagar.delta", 0), ConfigError);
  EXPECT_THROW(cfg.get_bool("pagar.use_r3", false), ConfigError);
  EXPECT_THROW(cfg.get_list("sweep.omega", {}), ConfigError);
}

TEST(Config, UnreadKeysReported) {
  std::istringstream in("seed = 1\npagar.typo_key = 3\n");
  const Config cfg = Config::parse(in);
  cfg.get_u64("seed", 0);
  EXPECT_EQ(cfg.unused(), std::vector<std::string>{"pagar.typo_key"});
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(Config::from_file("/nonexistent/dir/cfg.txt"), ConfigError);
}

TEST(TraceCsv, HeaderAndRows) {
  TrainTrace trace;
  trace.metric_names = {"prob_s2", "prob_s6"};
  TrainRecord rec;
  rec.iteration = 3;
  rec.lambda = 2.5;
  rec.irl_value = -1.0;
  rec.j_pagar = 0.125;
  rec.regret = 0.5;
  rec.metrics = {0.25, 0.75};
  trace.records.push_back(rec);
  std::ostringstream out;
  write_trace_csv(out, trace);
  EXPECT_EQ(out.str(), "iter,lambda,irl_loss,j_pagar,regret_estimate,prob_s2,prob_s6\n3,2.5,-1,0.125,0.5,0.25,0.75\n");
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(WriteFileAtomic, CreatesParentsAndReplaces) {
  const auto dir = std::filesystem::temp_directory_path() / "pagar_io_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "a" / "b.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "second");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove_all(dir);
}
