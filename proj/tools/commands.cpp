#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "pagar/alignment.hpp"
#include "pagar/envs.hpp"
#include "pagar/error.hpp"
#include "pagar/io.hpp"
#include "pagar/suites.hpp"

#ifndef PAGAR_VERSION
#define PAGAR_VERSION "unknown"
#endif

namespace pagar::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

LogLevel g_level = LogLevel::info;

void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(g_level)) return;
  static std::mutex m;
  std::lock_guard lock(m);
  static const char* const names[] = {"error", "info", "debug"};
  std::cerr << "[pagar " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception
// is rethrown after every worker has stopped.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(workers, n); ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Shared state of one command invocation: resolved config, output directory
// and the inventory that ends up in the manifest.
class Run {
 public:
  Run(const CommonOptions& opts, std::string command) : command_(std::move(command)) {
    if (opts.config) {
      if (!fs::exists(*opts.config)) throw ConfigError("config file not found: " + opts.config->string());
      cfg_ = Config::from_file(*opts.config);
    }
    if (opts.seed) cfg_.set("seed", std::to_string(*opts.seed));
    const std::string named = cfg_.get_string("command", command_);
    if (named != command_) throw ConfigError("config is for command '" + named + "', not '" + command_ + "'");
    seed_ = cfg_.get_u64("seed", 0);
    out_ = opts.out ? *opts.out : fs::path(cfg_.get_string("out", "out/" + command_));
    workers_ = opts.workers ? *opts.workers : cfg_.get_size("workers", 1);
    if (workers_ == 0) throw ConfigError("workers must be at least 1");
    const std::string level = cfg_.get_string("log_level", "");
    if (!std::getenv("PAGAR_LOG_LEVEL") && !level.empty()) {
      if (level == "error") g_level = LogLevel::error;
      else if (level == "info") g_level = LogLevel::info;
      else if (level == "debug") g_level = LogLevel::debug;
      else throw ConfigError("log_level must be error, info or debug");
    }
    start_ = std::chrono::steady_clock::now();
  }

  const Config& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t workers() const { return workers_; }
  json& metrics() { return metrics_; }

  // Every key in the config file must have been read by now.
  void reject_unused() const {
    const auto unused = cfg_.unused();
    if (!unused.empty()) throw ConfigError("unrecognized config key '" + unused.front() + "'");
  }

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(out_ / name, content);
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    log(LogLevel::debug, "wrote " + (out_ / name).string());
  }

  void write_manifest(const std::string& status, const std::string& note = "") {
    json m;
    m["command"] = command_;
    m["version"] = PAGAR_VERSION;
    m["status"] = status;
    if (!note.empty()) m["note"] = note;
    json echo = json::object();
    for (const auto& [k, v] : cfg_.values()) echo[k] = v;
    m["config"] = echo;
    m["seed"] = seed_;
    m["workers"] = workers_;
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["metrics"] = metrics_;
    m["files"] = files_;
    write_file_atomic(out_ / "manifest.json", m.dump(2) + "\n");
  }

  const fs::path& out() const { return out_; }

 private:
  std::string command_;
  Config cfg_;
  std::uint64_t seed_ = 0;
  fs::path out_;
  std::size_t workers_ = 1;
  json metrics_ = json::object();
  std::vector<std::string> files_;
  std::chrono::steady_clock::time_point start_;
};

// Parse phase, then execution phase. Config problems in either map to exit
// code 2; other failures leave a partial manifest and exit 1.
int guarded(const CommonOptions& opts, const std::string& command, const std::function<int(Run&)>& body) {
  std::optional<Run> run;
  try {
    g_level = opts.log_level;
    run.emplace(opts, command);
    return body(*run);
  } catch (const ConfigError& e) {
    log(LogLevel::error, e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    log(LogLevel::error, e.what());
    if (run) {
      try {
        run->write_manifest("partial", std::string("aborted: ") + e.what());
      } catch (const std::exception& inner) {
        log(LogLevel::error, std::string("could not write manifest: ") + inner.what());
      }
    }
    return kFailure;
  }
}

// Converts library argument errors raised while reading settings into
// configuration errors.
template <typename F>
auto as_config(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

PagarConfig read_pagar_config(const Config& c, PagarConfig d) {
  return as_config([&] {
    d.lambda0 = c.get_double("pagar.lambda0", d.lambda0);
    d.mu = c.get_double("pagar.mu", d.mu);
    d.lambda_floor = c.get_bool("pagar.lambda_floor", d.lambda_floor);
    d.surrogate.clip = c.get_double("pagar.surrogate_clip", d.surrogate.clip);
    d.iterations = c.get_size("pagar.iterations", d.iterations);
    d.protagonist_batch = c.get_size("pagar.protagonist_batch", d.protagonist_batch);
    d.antagonist_batch = c.get_size("pagar.antagonist_batch", d.antagonist_batch);
    d.max_trajectory_length = c.get_size("pagar.max_trajectory_length", d.max_trajectory_length);
    d.entropy_weight = c.get_double("pagar.entropy_weight", d.entropy_weight);
    d.step_size = c.get_double("pagar.step_size", d.step_size);
    d.clip_norm = c.get_double("pagar.clip_norm", d.clip_norm);
    d.exact_surrogate = c.get_bool("pagar.exact_surrogate", d.exact_surrogate);
    d.antagonist = antagonist_mode_from_string(c.get_string("pagar.antagonist", to_string(d.antagonist)));
    d.antagonist_steps = c.get_size("pagar.antagonist_steps", d.antagonist_steps);
    d.antagonist_step_size = c.get_double("pagar.antagonist_step_size", d.antagonist_step_size);
    d.reward_search = reward_search_from_string(c.get_string("pagar.reward_search", to_string(d.reward_search)));
    d.reward_grid_resolution = c.get_size("pagar.reward_grid_resolution", d.reward_grid_resolution);
    d.reward_step_size = c.get_double("pagar.reward_step_size", d.reward_step_size);
    d.kl_scale = c.get_double("pagar.kl_scale", d.kl_scale);
    d.use_r3 = c.get_bool("pagar.use_r3", d.use_r3);
    d.use_r4 = c.get_bool("pagar.use_r4", d.use_r4);
    d.irl_mode = irl_mode_from_string(c.get_string("irl.mode", to_string(d.irl_mode)));
    d.irl_fit.grid_resolution = c.get_size("irl.grid_resolution", d.irl_fit.grid_resolution);
    d.irl_fit.fd_step = c.get_double("irl.fd_step", d.irl_fit.fd_step);
    d.validate();
    return d;
  });
}

// An environment plus the training defaults validated for it.
struct Environment {
  std::string name;
  TabularMdp mdp;
  RewardFamily family;
  DemoSet demos;
  TaskSpec task;
  PagarConfig defaults;
  double delta_fraction = 0.3;  // delta = max - fraction * (max - min) over the reward grid
  std::function<void(const SoftPolicy&, json&)> report;  // environment-specific final metrics
};

fs::path existing_path(const Config& c, const std::string& key) {
  const std::string p = c.get_string(key, "");
  if (p.empty()) throw ConfigError("config key '" + key + "' is required");
  if (!fs::exists(p)) throw ConfigError("config key '" + key + "' names a missing file: " + p);
  return p;
}

Environment file_environment(const Config& c) {
  const TabularMdp mdp = read_mdp_file(existing_path(c, "env.mdp"));
  DemoSet demos = read_demos_file(existing_path(c, "env.demos"));
  demos.validate(mdp);
  std::vector<Table> features;
  for (const std::string& p : split_names(c.get_string("env.features", ""))) {
    if (!fs::exists(p)) throw ConfigError("feature file not found: " + p);
    std::ifstream in(p);
    features.push_back(read_matrix(in));
  }
  if (features.empty()) throw ConfigError("config key 'env.features' must list at least one matrix file");
  const Interval box{c.get_double("env.box_lo", -1.0), c.get_double("env.box_hi", 1.0)};
  RewardFamily family(features, std::vector<Interval>(features.size(), box));

  const std::size_t target = c.get_size("env.target", mdp.n_states() - 1);
  if (target >= mdp.n_states()) throw ConfigError("env.target is not a state of the MDP");
  const std::size_t horizon = c.get_size("env.target_horizon", mdp.horizon().value_or(50));
  const double threshold = c.get_double("env.threshold", 0.5);
  auto shared = std::make_shared<TabularMdp>(mdp);
  TaskSpec task;
  task.name = "reach state " + std::to_string(target);
  auto reach = [shared, target, horizon](const SoftPolicy& pi) {
    return visit_probability(*shared, pi, target, horizon);
  };
  task.score = [reach, threshold](const SoftPolicy& pi) { return reach(pi) - threshold; };
  task.accepts = [score = task.score](const SoftPolicy& pi) { return score(pi) >= 0.0; };
  task.metrics = {{"target_reach", reach}};
  PagarConfig d;
  d.irl_mode = IrlMode::maxent;
  return Environment{"file", mdp, family, std::move(demos), std::move(task), d, 0.3, {}};
}

Environment make_environment(const Config& c, std::uint64_t seed) {
  return as_config([&]() -> Environment {
    const std::string name = c.get_string("env.name", "example1");
    if (name == "example1") {
      Example1 e = build_example1();
      PagarConfig d;
      d.irl_mode = IrlMode::trajectory;
      return Environment{name, e.mdp, e.family, e.demos, e.task, d, 0.3, {}};
    }
    if (name == "gridworld") {
      GridworldSpec spec;
      spec.slip = c.get_double("env.slip", spec.slip);
      spec.n_demos = c.get_size("env.demos", spec.n_demos);
      spec.demo_seed = c.get_u64("env.demo_seed", seed);
      spec.step_limit = c.get_size("env.step_limit", spec.step_limit);
      spec.threshold = c.get_double("env.threshold", spec.threshold);
      auto world = std::make_shared<Gridworld>(build_gridworld(spec));
      PagarConfig d;
      d.irl_mode = IrlMode::maxent;
      d.reward_grid_resolution = 11;
      d.step_size = 20.0;
      auto report = [world](const SoftPolicy& pi, json& m) {
        const SoftPolicy best = hard_value_iteration(world->mdp, world->hidden_reward).policy;
        m["hidden_optimum_goal_reach"] = world->goal_probability(best);
        m["demo_goal_reach"] = world->goal_probability(world->demo_policy);
        m["goal_reach"] = world->goal_probability(pi);
      };
      return Environment{name, world->mdp, world->family, world->demos, world->task, d, 0.02, report};
    }
    if (name == "random") {
      RandomBenchmarkOptions o;
      o.n_states = c.get_size("env.states", o.n_states);
      o.n_actions = c.get_size("env.actions", o.n_actions);
      o.param_dim = c.get_size("env.param_dim", o.param_dim);
      o.n_demos = c.get_size("env.demos", o.n_demos);
      RandomBenchmark b = build_random_benchmark(c.get_u64("env.seed", seed), o);
      PagarConfig d;
      d.irl_mode = IrlMode::maxent;
      return Environment{name, b.mdp, b.family, b.demos, b.task, d, 0.3, {}};
    }
    if (name == "file") return file_environment(c);
    throw ConfigError("env.name must be example1, gridworld, random or file");
  });
}

std::function<double(const Vector&)> make_irl(const Environment& env, const PagarConfig& cfg) {
  auto objective = std::make_shared<IrlObjective>(env.mdp, env.family, env.demos, cfg.irl_mode, cfg.irl_fit);
  return [objective](const Vector& p) { return (*objective)(p); };
}

std::pair<double, double> objective_range(const RewardFamily& family, const std::function<double(const Vector&)>& irl,
                                          std::size_t resolution) {
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (const Vector& p : family.grid(resolution)) {
    const double v = irl(p);
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  return {lo, hi};
}

std::string matrix_text(const Table& m) {
  std::ostringstream os;
  write_matrix(os, m);
  return os.str();
}

json outcome_json(const std::string& suite, const InstanceOutcome& o) {
  json values = json::object();
  for (const auto& [k, v] : o.values) values[k] = v;
  return json{{"suite", suite}, {"index", o.index}, {"seed", o.seed}, {"passed", o.passed},
              {"applicable", o.applicable}, {"values", values}, {"note", o.note}};
}

SuiteOptions read_suite_options(const Run& run, std::size_t default_size) {
  const Config& c = run.config();
  SuiteOptions s;
  s.size = c.get_size("sweep.size", default_size);
  if (s.size == 0) throw ConfigError("sweep.size must be positive");
  s.seed = run.seed();
  if (c.has("sweep.instance")) {
    s.only = c.get_size("sweep.instance", 0);
    if (*s.only >= s.size) throw ConfigError("sweep.instance must be below sweep.size");
  }
  s.workers = run.workers();
  return s;
}

}  // namespace

LogLevel log_level_from_env() {
  const char* v = std::getenv("PAGAR_LOG_LEVEL");
  if (!v || !*v) return LogLevel::info;
  const std::string s(v);
  if (s == "error") return LogLevel::error;
  if (s == "info") return LogLevel::info;
  if (s == "debug") return LogLevel::debug;
  throw ConfigError("PAGAR_LOG_LEVEL must be error, info or debug");
}

int run_train(const CommonOptions& opts) {
  return guarded(opts, "train", [](Run& run) {
    const Config& c = run.config();
    const Environment env = make_environment(c, run.seed());
    PagarConfig cfg = read_pagar_config(c, env.defaults);
    cfg.seed = run.seed();
    const double fraction = c.get_double("pagar.delta_fraction", env.delta_fraction);
    const bool fixed = c.has("pagar.delta");
    const double fixed_delta = c.get_double("pagar.delta", 0.0);
    run.reject_unused();

    const auto irl = make_irl(env, cfg);
    const auto [lo, hi] = objective_range(env.family, irl, cfg.reward_grid_resolution);
    cfg.delta = fixed ? fixed_delta : hi - fraction * (hi - lo);
    log(LogLevel::info, "train on " + env.name + " with delta " + format_double(cfg.delta) + " (grid max " +
                            format_double(hi) + ")");

    const TrainResult result = train(env.mdp, env.family, irl, env.task, cfg);
    run.write("policy_logits.txt", matrix_text(result.protagonist.logits()));
    std::ostringstream trace;
    write_trace_csv(trace, result.trace);
    run.write("trace.csv", trace.str());

    json& m = run.metrics();
    m["env"] = env.name;
    m["delta"] = cfg.delta;
    m["irl_grid_max"] = hi;
    m["lambda"] = result.lambda;
    m["accepted"] = env.task.accepts(result.protagonist);
    m["reward_params"] = std::vector<double>(result.reward_params.data(),
                                             result.reward_params.data() + result.reward_params.size());
    if (!result.trace.records.empty()) m["final_regret"] = result.trace.records.back().regret;
    for (const auto& [name, fn] : env.task.metrics) m[name] = fn(result.protagonist);
    if (env.report) env.report(result.protagonist, m);
    run.write_manifest("complete");
    log(LogLevel::info, "done; outputs in " + run.out().string());
    return int(kSuccess);
  });
}

int run_example1_sweep(const CommonOptions& opts) {
  return guarded(opts, "example1-sweep", [](Run& run) {
    const Config& c = run.config();
    const Example1 e = build_example1();
    PagarConfig defaults;
    defaults.irl_mode = IrlMode::trajectory;
    const PagarConfig base = read_pagar_config(c, defaults);
    std::vector<double> deltas = c.get_list("sweep.delta", {0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.2,
                                                            2.4, 2.6, 2.8, 3.0});
    const bool add_max = c.get_bool("sweep.include_max", true);
    std::vector<double> omega_grid;
    for (int i = 0; i <= 100; ++i) omega_grid.push_back(i / 100.0);
    const std::vector<double> omegas = c.get_list("sweep.omega", omega_grid);
    const std::size_t policy_res = c.get_size("sweep.policy_resolution", 1001);
    run.reject_unused();

    const IrlReport fit = irl_fit(e.mdp, e.family, e.demos, base.irl_mode, base.irl_fit);
    const double delta_star = fit.best_loss;
    if (add_max) deltas.push_back(delta_star);
    for (double d : deltas)
      if (d > delta_star + 1e-9)
        throw ConfigError("delta " + format_double(d) + " exceeds the IRL maximum " + format_double(delta_star));
    log(LogLevel::info, "IRL optimum omega " + format_double(fit.best_params(0)) + ", max " + format_double(delta_star));

    auto objective = std::make_shared<IrlObjective>(e.mdp, e.family, e.demos, base.irl_mode, base.irl_fit);
    const auto irl = [objective](const Vector& p) { return (*objective)(p); };
    const PolicyGrid grid = enumerate_policy_grid(e.mdp, policy_res);

    struct Point {
      double train_p = 0.0, oracle_p = 0.0;
      std::size_t rewards = 0;
    };
    std::vector<Point> points(deltas.size());
    parallel_for(deltas.size(), run.workers(), [&](std::size_t i) {
      PagarConfig cfg = base;
      cfg.delta = deltas[i];
      cfg.seed = instance_seed(run.seed(), i);
      const TrainResult r = train(e.mdp, e.family, irl, e.task, cfg);
      DeltaRewardSet set(e.family, deltas[i], irl);
      std::vector<RewardPoint> rewards;
      for (const Vector& p : set.grid_members(cfg.reward_grid_resolution)) rewards.push_back(materialize(e.family, p));
      const MinimaxResult mm = minimax_regret_bruteforce(e.mdp, rewards, grid.policies);
      points[i] = {Example1::a2_probability(r.protagonist), Example1::a2_probability(mm.policy), rewards.size()};
      log(LogLevel::debug, "delta " + format_double(deltas[i]) + ": p = " + format_double(points[i].train_p));
    });

    auto in_band = [](double p) { return p >= Example1::success_lo && p <= Example1::success_hi; };
    std::ostringstream dcsv;
    dcsv << "delta,train_pi_a2_s0,oracle_pi_a2_s0,train_success,oracle_success,rewards_in_set\n";
    std::size_t below_cutoff = 0, below_cutoff_ok = 0;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      const Point& p = points[i];
      dcsv << format_double(deltas[i]) << ',' << format_double(p.train_p) << ',' << format_double(p.oracle_p) << ','
           << in_band(p.train_p) << ',' << in_band(p.oracle_p) << ',' << p.rewards << '\n';
      if (deltas[i] < 1.1) {
        ++below_cutoff;
        below_cutoff_ok += in_band(p.train_p);
      }
    }
    run.write("delta_curve.csv", dcsv.str());

    std::vector<double> values(omegas.size());
    parallel_for(omegas.size(), run.workers(), [&](std::size_t i) {
      Vector w(1);
      w(0) = omegas[i];
      values[i] = irl(e.family.project(w));
    });
    std::ostringstream wcsv;
    wcsv << "omega,irl_objective\n";
    for (std::size_t i = 0; i < omegas.size(); ++i) wcsv << format_double(omegas[i]) << ',' << format_double(values[i]) << '\n';
    run.write("omega_curve.csv", wcsv.str());

    json& m = run.metrics();
    m["omega_star"] = fit.best_params(0);
    m["delta_star"] = delta_star;
    m["omega_curve_argmax"] = omegas[std::max_element(values.begin(), values.end()) - values.begin()];
    m["success_band"] = {Example1::success_lo, Example1::success_hi};
    m["deltas_below_1.1"] = below_cutoff;
    m["deltas_below_1.1_in_band"] = below_cutoff_ok;
    if (add_max) m["pi_a2_s0_at_delta_star"] = points.back().train_p;
    run.write_manifest("complete");
    return int(kSuccess);
  });
}

int run_verify(const CommonOptions& opts) {
  return guarded(opts, "verify", [](Run& run) {
    const Config& c = run.config();
    const std::vector<std::string> suites = split_names(
        c.get_string("sweep.suites", "bounds,decision-rule,counting,nested-probe"));
    if (suites.empty()) throw ConfigError("sweep.suites names no suite");
    const auto known = suite_names();
    for (const auto& s : suites)
      if (std::find(known.begin(), known.end(), s) == known.end()) throw ConfigError("unknown suite '" + s + "'");
    const SuiteOptions so = read_suite_options(run, 20);
    run.reject_unused();

    json summary = json::array();
    json counterexamples = json::array();
    bool all_pass = true;
    for (const auto& name : suites) {
      const SuiteReport r = run_suite(name, so);
      all_pass = all_pass && r.passed();
      summary.push_back({{"suite", name}, {"instances", r.outcomes.size()}, {"failures", r.failures()},
                         {"applicable", r.applicable()}, {"passed", r.passed()}});
      for (const auto& o : r.outcomes)
        if (!o.passed) counterexamples.push_back(outcome_json(name, o));
      log(r.passed() ? LogLevel::info : LogLevel::error,
          name + ": " + std::to_string(r.failures()) + " failures in " + std::to_string(r.outcomes.size()) +
              " instances (seed " + std::to_string(so.seed) + ")");
    }
    run.write("verify.json", json{{"seed", so.seed}, {"suites", summary}}.dump(2) + "\n");
    if (!counterexamples.empty()) run.write("counterexamples.json", counterexamples.dump(2) + "\n");
    run.metrics()["all_passed"] = all_pass;
    run.metrics()["counterexamples"] = counterexamples.size();
    run.write_manifest("complete");
    return int(all_pass ? kSuccess : kFailure);
  });
}

int run_random_suite(const CommonOptions& opts) {
  return guarded(opts, "random-suite", [](Run& run) {
    const Config& c = run.config();
    BenchmarkSettings s = default_benchmark_settings();
    s.config = read_pagar_config(c, s.config);
    s.delta_fraction = c.get_double("sweep.delta_fraction", s.delta_fraction);
    s.reward_resolution = c.get_size("sweep.reward_resolution", s.reward_resolution);
    s.policy_resolution = c.get_size("sweep.policy_resolution", s.policy_resolution);
    s.relative_tolerance = c.get_double("sweep.relative_tolerance", s.relative_tolerance);
    s.absolute_tolerance = c.get_double("sweep.absolute_tolerance", s.absolute_tolerance);
    const SuiteOptions so = read_suite_options(run, 10);
    run.reject_unused();

    const SuiteReport r = regret_gap_suite(so, s);
    std::ostringstream csv;
    csv << "index,seed,delta,rewards,policies,oracle_regret,trained_regret,tolerance,passed\n";
    json counterexamples = json::array();
    for (const auto& o : r.outcomes) {
      csv << o.index << ',' << o.seed << ',' << format_double(o.value("delta")) << ',' << o.value("rewards") << ','
          << o.value("policies") << ',' << format_double(o.value("oracle_regret")) << ','
          << format_double(o.value("trained_regret")) << ',' << format_double(o.value("tolerance")) << ','
          << o.passed << '\n';
      if (!o.passed) counterexamples.push_back(outcome_json(r.name, o));
    }
    run.write("random_suite.csv", csv.str());
    if (!counterexamples.empty()) run.write("counterexamples.json", counterexamples.dump(2) + "\n");
    run.metrics()["instances"] = r.outcomes.size();
    run.metrics()["failures"] = r.failures();
    log(r.passed() ? LogLevel::info : LogLevel::error,
        "regret gap: " + std::to_string(r.failures()) + " failures in " + std::to_string(r.outcomes.size()));
    run.write_manifest("complete");
    return int(r.passed() ? kSuccess : kFailure);
  });
}

}  // namespace pagar::cli
