#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"
#include "pagar/error.hpp"

int main(int argc, char** argv) {
  using namespace pagar::cli;
  CLI::App app{"Protagonist-antagonist reward learning: sweeps, training and verification suites"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string config, out;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Flat key = value config file");
    sub->add_option("--seed", seed, "Overrides the config seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--workers", workers, "Concurrent sweep points")->check(CLI::PositiveNumber);
  };
  auto* sweep = app.add_subcommand("example1-sweep", "Delta and omega curves on the two-branch example");
  auto* trainer = app.add_subcommand("train", "Train a protagonist policy");
  auto* verify = app.add_subcommand("verify", "Randomized theory verification suites");
  auto* random = app.add_subcommand("random-suite", "Solver-vs-oracle regret gap on random benchmarks");
  for (auto* sub : {sweep, trainer, verify, random}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    opts.log_level = log_level_from_env();
  } catch (const pagar::ConfigError& e) {
    std::cerr << "[pagar error] " << e.what() << '\n';
    return kUsageError;
  }
  auto* used = app.get_subcommands().front();
  if (!config.empty()) opts.config = config;
  if (!out.empty()) opts.out = out;
  if (used->count("--seed")) opts.seed = seed;
  if (used->count("--workers")) opts.workers = workers;

  if (used == sweep) return run_example1_sweep(opts);
  if (used == trainer) return run_train(opts);
  if (used == verify) return run_verify(opts);
  return run_random_suite(opts);
}
