#include "pagar/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <thread>

#include "pagar/error.hpp"

namespace pagar {

namespace {

constexpr double kTieTolerance = 1e-12;

double clip_ratio(double num, double den) {
  if (den <= 0.0) return kMaxRatio;
  return std::clamp(num / den, kMinRatio, kMaxRatio);
}

// Mean over trajectories of sum_t gamma^t term(s_t, a_t). Finite-horizon
// tasks divide each trajectory's sum by its number of steps.
template <class Term>
double sample_mean(const TabularMdp& mdp, std::span<const Trajectory> samples, Term term) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const Trajectory& traj : samples) {
    double sum = 0.0;
    double discount = 1.0;
    std::size_t steps = 0;
    for (const Step& st : traj.steps) {
      if (st.action != kNoAction) {
        sum += discount * term(st.state, st.action);
        ++steps;
      }
      discount *= mdp.gamma();
    }
    if (mdp.finite_horizon() && steps > 0) sum /= static_cast<double>(steps);
    total += sum;
  }
  return total / static_cast<double>(samples.size());
}

double max_abs_sampled(const RewardTable& reward, std::span<const Trajectory> samples) {
  double m = 0.0;
  for (const Trajectory& traj : samples)
    for (const Step& st : traj.steps)
      if (st.action != kNoAction) m = std::max(m, std::abs(reward(st.state, st.action)));
  return m;
}

double max_abs_visited(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& visitor) {
  const Occupancy occ = occupancy(mdp, visitor);
  double m = 0.0;
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      if (occ.state_action(s, a) > 0.0) m = std::max(m, std::abs(reward(s, a)));
  return m;
}

double kl_at(const SoftPolicy& p, const SoftPolicy& q, std::size_t s) {
  double kl = 0.0;
  for (std::size_t a = 0; a < p.n_actions(); ++a) {
    const double pa = p.prob(s, a);
    if (pa <= 0.0) continue;
    const double qa = q.prob(s, a);
    if (qa <= 0.0) return std::numeric_limits<double>::infinity();
    kl += pa * std::log(pa / qa);
  }
  return std::max(kl, 0.0);
}

double clipped_min(double xi, double r, double clip) {
  return std::min(xi * r, std::clamp(xi, 1.0 - clip, 1.0 + clip) * r);
}

void require_exp_safe(const RewardTable& reward, std::span<const Trajectory> samples) {
  if (max_abs_sampled(reward, samples) > kMaxExpReward)
    throw InvalidArgument("reward magnitude above " + std::to_string(kMaxExpReward) + " in an exp(r) ratio term");
}

Vector flatten(const Table& t) { return Eigen::Map<const Vector>(t.data(), t.size()); }

// Runs fn(i) for i in [0, n) on up to `workers` threads; results must be
// written to disjoint slots so the outcome is independent of scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

RegretReport regret(const TabularMdp& mdp, const RewardPoint& reward, const SoftPolicy& protagonist,
                    const SolverOptions& opts) {
  RegretReport rep;
  rep.antagonist_utility = hard_value_iteration(mdp, reward.table, opts).start_value;
  rep.protagonist_utility = policy_utility(mdp, reward.table, protagonist);
  rep.regret = rep.antagonist_utility - rep.protagonist_utility;
  rep.witness_reward_params = reward.params;
  return rep;
}

double regret(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist) {
  return hard_value_iteration(mdp, reward).start_value - policy_utility(mdp, reward, protagonist);
}

std::vector<RewardTable> reward_tables(std::span<const RewardPoint> points) {
  std::vector<RewardTable> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.table);
  return out;
}

Table utility_matrix(const TabularMdp& mdp, std::span<const RewardTable> rewards, std::span<const SoftPolicy> policies,
                     std::size_t workers) {
  const auto pairs = static_cast<Eigen::Index>(mdp.n_pairs());
  Eigen::MatrixXd rho(static_cast<Eigen::Index>(policies.size()), pairs);
  parallel_for(policies.size(), workers, [&](std::size_t i) {
    rho.row(static_cast<Eigen::Index>(i)) = flatten(occupancy(mdp, policies[i]).state_action).transpose();
  });
  Eigen::MatrixXd rmat(pairs, static_cast<Eigen::Index>(rewards.size()));
  for (std::size_t j = 0; j < rewards.size(); ++j) {
    require(static_cast<std::size_t>(rewards[j].rows()) == mdp.n_states() &&
                static_cast<std::size_t>(rewards[j].cols()) == mdp.n_actions(),
            "reward table shape does not match the MDP");
    rmat.col(static_cast<Eigen::Index>(j)) = flatten(rewards[j]);
  }
  return rho * rmat;
}

Vector optimal_utilities(const TabularMdp& mdp, std::span<const RewardTable> rewards) {
  Vector out(static_cast<Eigen::Index>(rewards.size()));
  for (std::size_t j = 0; j < rewards.size(); ++j)
    out(static_cast<Eigen::Index>(j)) = hard_value_iteration(mdp, rewards[j]).start_value;
  return out;
}

MinimaxResult minimax_from_regrets(const Table& regrets) {
  require(regrets.rows() > 0 && regrets.cols() > 0, "minimax needs non-empty policy and reward grids");
  MinimaxResult res;
  res.max_regret.resize(static_cast<std::size_t>(regrets.rows()));
  std::vector<std::size_t> witness(res.max_regret.size());
  for (Eigen::Index i = 0; i < regrets.rows(); ++i) {
    Eigen::Index j = 0;
    const double m = regrets.row(i).maxCoeff(&j);
    res.max_regret[static_cast<std::size_t>(i)] = m;
    witness[static_cast<std::size_t>(i)] = static_cast<std::size_t>(j);
  }
  for (std::size_t i = 1; i < res.max_regret.size(); ++i)
    if (res.max_regret[i] < res.max_regret[res.policy_index] - kTieTolerance) res.policy_index = i;
  res.worst_regret = res.max_regret[res.policy_index];
  res.witness_reward = witness[res.policy_index];
  return res;
}

MinimaxResult minimax_regret_bruteforce(const TabularMdp& mdp, std::span<const RewardPoint> rewards,
                                        std::span<const SoftPolicy> policies, std::size_t workers) {
  require(!rewards.empty() && !policies.empty(), "minimax needs non-empty policy and reward grids");
  if (static_cast<double>(rewards.size()) * static_cast<double>(policies.size()) >
      static_cast<double>(kMaxRegretEvaluations))
    throw GuardViolation("minimax oracle would exceed " + std::to_string(kMaxRegretEvaluations) +
                         " regret evaluations");
  const auto tables = reward_tables(rewards);
  const Table u = utility_matrix(mdp, tables, policies, workers);
  const Vector best = optimal_utilities(mdp, tables);
  const Table regrets = (-u).rowwise() + best.transpose();
  MinimaxResult res = minimax_from_regrets(regrets);
  res.policy = policies[res.policy_index];
  return res;
}

double max_sampled_kl(std::span<const Trajectory> samples, const SoftPolicy& antagonist,
                      const SoftPolicy& protagonist) {
  double m = 0.0;
  for (const Trajectory& traj : samples)
    for (const Step& st : traj.steps) m = std::max(m, kl_at(antagonist, protagonist, st.state));
  return m;
}

double max_visited_kl(const TabularMdp& mdp, const SoftPolicy& visitor, const SoftPolicy& antagonist,
                      const SoftPolicy& protagonist) {
  const Occupancy occ = occupancy(mdp, visitor);
  double m = 0.0;
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    if (occ.state(s) > 0.0) m = std::max(m, kl_at(antagonist, protagonist, s));
  return m;
}

double j_pagar_r1(const TabularMdp& mdp, const RewardTable& reward, std::span<const Trajectory> antagonist_samples,
                  const SoftPolicy& protagonist, const SoftPolicy& antagonist, double c1) {
  const double main = sample_mean(mdp, antagonist_samples, [&](std::size_t s, std::size_t a) {
    return (clip_ratio(protagonist.prob(s, a), antagonist.prob(s, a)) - 1.0) * reward(s, a);
  });
  return main + c1 * max_abs_sampled(reward, antagonist_samples);
}

double j_pagar_r2(const TabularMdp& mdp, const RewardTable& reward, std::span<const Trajectory> protagonist_samples,
                  const SoftPolicy& protagonist, const SoftPolicy& antagonist, double c2) {
  const double main = sample_mean(mdp, protagonist_samples, [&](std::size_t s, std::size_t a) {
    return (1.0 - clip_ratio(antagonist.prob(s, a), protagonist.prob(s, a))) * reward(s, a);
  });
  return main + c2 * max_abs_sampled(reward, protagonist_samples);
}

double j_pagar_r1_exact(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                        const SoftPolicy& antagonist, double c1) {
  const Occupancy occ = occupancy(mdp, antagonist);
  double main = 0.0;
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const double w = occ.state_action(s, a);
      if (w > 0.0) main += w * (clip_ratio(protagonist.prob(s, a), antagonist.prob(s, a)) - 1.0) * reward(s, a);
    }
  return main + c1 * max_abs_visited(mdp, reward, antagonist);
}

double j_pagar_r2_exact(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                        const SoftPolicy& antagonist, double c2) {
  const Occupancy occ = occupancy(mdp, protagonist);
  double main = 0.0;
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const double w = occ.state_action(s, a);
      if (w > 0.0) main += w * (1.0 - clip_ratio(antagonist.prob(s, a), protagonist.prob(s, a))) * reward(s, a);
    }
  return main + c2 * max_abs_visited(mdp, reward, protagonist);
}

double j_pagar_r3_unclipped_term(const TabularMdp& mdp, const RewardTable& reward,
                                 std::span<const Trajectory> antagonist_samples, const SoftPolicy& antagonist) {
  require_exp_safe(reward, antagonist_samples);
  return sample_mean(mdp, antagonist_samples, [&](std::size_t s, std::size_t a) {
    return clip_ratio(std::exp(reward(s, a)), antagonist.prob(s, a)) * reward(s, a);
  });
}

double j_pagar_r3_clipped_term(const TabularMdp& mdp, const RewardTable& reward,
                               std::span<const Trajectory> antagonist_samples, const SoftPolicy& antagonist,
                               double clip) {
  require_exp_safe(reward, antagonist_samples);
  return sample_mean(mdp, antagonist_samples, [&](std::size_t s, std::size_t a) {
    return clipped_min(clip_ratio(std::exp(reward(s, a)), antagonist.prob(s, a)), reward(s, a), clip);
  });
}

double j_pagar_r3(const TabularMdp& mdp, const RewardTable& reward, std::span<const Trajectory> protagonist_samples,
                  std::span<const Trajectory> antagonist_samples, const SoftPolicy& antagonist, double clip) {
  const double own =
      sample_mean(mdp, protagonist_samples, [&](std::size_t s, std::size_t a) { return reward(s, a); });
  return own - j_pagar_r3_clipped_term(mdp, reward, antagonist_samples, antagonist, clip);
}

double j_pagar_r4(const TabularMdp& mdp, const RewardTable& reward, std::span<const Trajectory> protagonist_samples,
                  const SoftPolicy& protagonist, double clip) {
  require_exp_safe(reward, protagonist_samples);
  const double own =
      sample_mean(mdp, protagonist_samples, [&](std::size_t s, std::size_t a) { return reward(s, a); });
  const double surrogate = sample_mean(mdp, protagonist_samples, [&](std::size_t s, std::size_t a) {
    return clipped_min(clip_ratio(std::exp(reward(s, a)), protagonist.prob(s, a)), reward(s, a), clip);
  });
  return own - surrogate;
}

double lambda_update(double lambda, double mu, double irl_value, double delta, std::optional<double> floor) {
  require(lambda > 0.0, "lambda must be positive");
  require(mu >= 0.0, "mu must be non-negative");
  const double next = lambda * std::exp(mu * (delta - irl_value));
  return floor ? std::max(*floor, next) : next;
}

BoundCheck theorem2_check(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy,
                          const SoftPolicy& reference, double entropy_weight) {
  require(!mdp.finite_horizon(), "the performance-difference bounds are stated for infinite horizons");
  require(mdp.gamma() < 1.0, "the performance-difference bounds need gamma < 1");
  const PolicyEvaluation ev = evaluate_policy(mdp, reward, reference, entropy_weight);
  const Table& adv = ev.layers.front().values.soft_advantage;
  const std::size_t n = mdp.n_states();

  BoundCheck out;
  Vector gap(n);
  for (std::size_t s = 0; s < n; ++s) {
    double d = 0.0;
    double tv = 0.0;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      if (!mdp.available(s, a)) continue;
      d += (policy.prob(s, a) - reference.prob(s, a)) * adv(s, a);
      tv += std::abs(policy.prob(s, a) - reference.prob(s, a));
      out.max_advantage = std::max(out.max_advantage, std::abs(adv(s, a)));
    }
    gap(s) = d;
    out.tv = std::max(out.tv, 0.5 * tv);
  }
  out.utility_gap = policy_utility(mdp, reward, policy) - ev.utility;
  out.own_state_estimate = occupancy(mdp, policy).state.dot(gap);
  out.ref_state_estimate = occupancy(mdp, reference).state.dot(gap);
  out.own_error = std::abs(out.utility_gap - out.own_state_estimate);
  out.ref_error = std::abs(out.utility_gap - out.ref_state_estimate);
  const double g = mdp.gamma();
  const double scale = 2.0 * out.tv * g * out.max_advantage / ((1.0 - g) * (1.0 - g));
  out.own_bound = scale;
  out.ref_bound = scale * (2.0 * out.tv + 1.0);
  return out;
}

const char* to_string(AntagonistMode mode) { return mode == AntagonistMode::exact ? "exact" : "gradient"; }
const char* to_string(RewardSearch mode) { return mode == RewardSearch::global ? "global" : "gradient"; }

AntagonistMode antagonist_mode_from_string(const std::string& name) {
  if (name == "exact") return AntagonistMode::exact;
  if (name == "gradient") return AntagonistMode::gradient;
  throw InvalidArgument("unknown antagonist mode: " + name);
}

RewardSearch reward_search_from_string(const std::string& name) {
  if (name == "global") return RewardSearch::global;
  if (name == "gradient") return RewardSearch::gradient;
  throw InvalidArgument("unknown reward search: " + name);
}

void PagarConfig::validate() const {
  require(lambda0 > 0.0, "lambda0 must be positive");
  require(mu >= 0.0, "mu must be non-negative");
  require(std::isfinite(delta), "delta must be finite");
  surrogate.validate();
  require(protagonist_batch > 0 && antagonist_batch > 0, "batch sizes must be positive");
  require(max_trajectory_length > 0, "trajectory length must be positive");
  require(entropy_weight >= 0.0, "entropy weight must be non-negative");
  require(step_size > 0.0 && antagonist_step_size > 0.0 && reward_step_size > 0.0, "step sizes must be positive");
  require(reward_grid_resolution >= 2, "reward grid resolution must be at least 2");
  require(kl_scale >= 0.0, "KL scale must be non-negative");
}

RewardLoss reward_loss(const RewardLossInputs& in, const Vector& params, const PagarConfig& cfg) {
  const TabularMdp& mdp = *in.mdp;
  const RewardTable r = in.family->table(params);
  const double kl = std::max(max_sampled_kl(in.antagonist_samples, *in.antagonist, *in.protagonist),
                             max_sampled_kl(in.protagonist_samples, *in.antagonist, *in.protagonist));
  const double c = std::isfinite(kl) ? cfg.kl_scale * kl : 0.0;
  RewardLoss loss;
  loss.j_pagar = j_pagar_r1(mdp, r, in.antagonist_samples, *in.protagonist, *in.antagonist, -c) +
                 j_pagar_r2(mdp, r, in.protagonist_samples, *in.protagonist, *in.antagonist, c);
  if (cfg.use_r3 || cfg.use_r4) {
    if (max_abs_sampled(r, in.protagonist_samples) > kMaxExpReward ||
        max_abs_sampled(r, in.antagonist_samples) > kMaxExpReward) {
      loss.j_pagar = std::numeric_limits<double>::infinity();
    } else {
      if (cfg.use_r3)
        loss.j_pagar += j_pagar_r3(mdp, r, in.protagonist_samples, in.antagonist_samples, *in.antagonist,
                                   cfg.surrogate.clip);
      if (cfg.use_r4) loss.j_pagar += j_pagar_r4(mdp, r, in.protagonist_samples, *in.protagonist, cfg.surrogate.clip);
    }
  }
  loss.irl_value = in.irl_objective(params);
  loss.penalty = in.lambda * std::max(cfg.delta - loss.irl_value, 0.0);
  return loss;
}

RewardStep reward_step(const RewardLossInputs& in, const Vector& params, const PagarConfig& cfg) {
  const RewardFamily& family = *in.family;
  require(family.contains(params, 1e-9), "reward parameters outside the box");
  RewardStep out;
  out.params = params;
  out.before = reward_loss(in, params, cfg);
  out.after = out.before;
  const auto d = static_cast<Eigen::Index>(family.param_dim());
  out.gradient = Vector::Zero(d);
  const double h = cfg.irl_fit.fd_step;
  for (Eigen::Index i = 0; i < d; ++i) {
    Vector hi = params, lo = params;
    hi(i) += h;
    lo(i) -= h;
    out.gradient(i) = (reward_loss(in, hi, cfg).total() - reward_loss(in, lo, cfg).total()) / (2.0 * h);
  }
  if (!out.gradient.allFinite() || out.gradient.norm() == 0.0) return out;
  double step = cfg.reward_step_size;
  for (std::size_t k = 0; k < 30; ++k, step *= 0.5) {
    const Vector cand = family.project(params - step * out.gradient);
    const RewardLoss l = reward_loss(in, cand, cfg);
    if (l.total() <= out.before.total() + kTieTolerance) {
      out.params = cand;
      out.after = l;
      out.halvings = k;
      return out;
    }
  }
  return out;
}

namespace {

// Reward candidates for the global adversary: cached IRL values, best
// achievable utilities and flattened tables for occupancy dot products.
struct CandidateSet {
  std::vector<Vector> params;
  std::vector<double> irl;
  Vector best_utility;
  Eigen::MatrixXd tables;  // pairs x candidates
};

CandidateSet build_candidates(const TabularMdp& mdp, const RewardFamily& family,
                              const std::function<double(const Vector&)>& irl, std::size_t resolution) {
  if (family.param_dim() > kMaxGridDim)
    throw GuardViolation("global reward search enumerates at most " + std::to_string(kMaxGridDim) + " dimensions");
  CandidateSet c;
  c.params = family.grid(resolution);
  const auto n = static_cast<Eigen::Index>(c.params.size());
  c.best_utility.resize(n);
  c.tables.resize(static_cast<Eigen::Index>(mdp.n_pairs()), n);
  c.irl.reserve(c.params.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& p = c.params[static_cast<std::size_t>(j)];
    const RewardTable r = family.table(p);
    c.irl.push_back(irl(p));
    c.best_utility(j) = hard_value_iteration(mdp, r).start_value;
    c.tables.col(j) = flatten(r);
  }
  return c;
}

std::size_t count_saturated(std::span<const Trajectory> samples, const SoftPolicy& protagonist,
                            const SoftPolicy& antagonist) {
  std::size_t n = 0;
  for (const Trajectory& traj : samples)
    for (const Step& st : traj.steps) {
      if (st.action == kNoAction) continue;
      const double pa = antagonist.prob(st.state, st.action);
      const double raw = pa > 0.0 ? protagonist.prob(st.state, st.action) / pa : kMaxRatio * 2.0;
      if (raw < kMinRatio || raw > kMaxRatio) ++n;
    }
  return n;
}

}  // namespace

TrainResult train(const TabularMdp& mdp, const RewardFamily& family, const DemoSet& demos, const TaskSpec& task,
                  const PagarConfig& cfg) {
  cfg.validate();
  demos.validate(mdp);
  const auto objective = std::make_shared<IrlObjective>(mdp, family, demos, cfg.irl_mode, cfg.irl_fit);
  return train(mdp, family, [objective](const Vector& p) { return (*objective)(p); }, task, cfg);
}

TrainResult train(const TabularMdp& mdp, const RewardFamily& family, const std::function<double(const Vector&)>& irl,
                  const TaskSpec& task, const PagarConfig& cfg) {
  cfg.validate();
  require(family.n_states() == mdp.n_states() && family.n_actions() == mdp.n_actions(),
          "reward family shape does not match the MDP");

  TrainResult out;
  out.protagonist = SoftPolicy::uniform(mdp);
  out.antagonist = SoftPolicy::uniform(mdp);
  out.reward_params = family.center();
  out.lambda = cfg.lambda0;
  for (const auto& [name, fn] : task.metrics) out.trace.metric_names.push_back(name);
  if (cfg.iterations == 0) return out;

  const std::size_t max_len = mdp.finite_horizon() ? *mdp.horizon() : cfg.max_trajectory_length;
  std::optional<CandidateSet> candidates;
  if (cfg.reward_search == RewardSearch::global)
    candidates = build_candidates(mdp, family, irl, cfg.reward_grid_resolution);

  std::mt19937_64 master(cfg.seed);
  OptimizerState protagonist_opt{cfg.step_size, cfg.clip_norm, 0};
  OptimizerState antagonist_opt{cfg.antagonist_step_size, cfg.clip_norm, 0};
  SolverOptions soft_opts;
  soft_opts.entropy_weight = cfg.entropy_weight;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::uint64_t seed_a = master();
    const std::uint64_t seed_p = master();
    const RewardTable r = family.table(out.reward_params);
    const auto samples_a = sample_trajectories(mdp, out.antagonist, cfg.antagonist_batch, max_len, seed_a);
    const auto samples_p = sample_trajectories(mdp, out.protagonist, cfg.protagonist_batch, max_len, seed_p);

    // Both policy updates read the same snapshot of the reward and of each other.
    const SoftPolicy antagonist_snapshot = out.antagonist;
    if (cfg.antagonist == AntagonistMode::exact) {
      if (mdp.finite_horizon() || cfg.entropy_weight > 0.0) {
        out.antagonist = soft_value_iteration(mdp, r, soft_opts).policy;
      } else {
        out.antagonist = hard_value_iteration(mdp, r).policy;
      }
    } else {
      for (std::size_t k = 0; k < cfg.antagonist_steps; ++k)
        out.antagonist = rl_gradient_step(mdp, r, out.antagonist, antagonist_opt, cfg.entropy_weight);
    }

    protagonist_opt.step_size = cfg.step_size / std::sqrt(static_cast<double>(it + 1));
    const std::span<const Trajectory> surrogate_samples =
        cfg.exact_surrogate ? std::span<const Trajectory>{} : std::span<const Trajectory>(samples_a);
    out.protagonist = protagonist_step(mdp, r, out.protagonist, antagonist_snapshot, surrogate_samples, cfg.surrogate,
                                       protagonist_opt, cfg.entropy_weight);

    TrainRecord rec;
    rec.iteration = it;
    rec.saturated_ratios = count_saturated(samples_a, out.protagonist, antagonist_snapshot);
    if (candidates) {
      // Best response over the candidate grid: maximize regret minus the
      // constraint penalty. Ties go to the lowest candidate index.
      const Vector rho = flatten(occupancy(mdp, out.protagonist).state_action);
      const Vector regrets = candidates->best_utility - candidates->tables.transpose() * rho;
      std::size_t best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < candidates->params.size(); ++j) {
        const double score = -regrets(static_cast<Eigen::Index>(j)) +
                             out.lambda * std::max(cfg.delta - candidates->irl[j], 0.0);
        if (score < best_score - kTieTolerance) {
          best_score = score;
          best = j;
        }
      }
      out.reward_params = candidates->params[best];
      rec.irl_value = candidates->irl[best];
      rec.regret = regrets(static_cast<Eigen::Index>(best));
    } else {
      RewardLossInputs in{&mdp, &family, &out.protagonist, &out.antagonist, samples_p, samples_a, irl, out.lambda};
      const RewardStep step = reward_step(in, out.reward_params, cfg);
      out.reward_params = step.params;
      rec.irl_value = step.after.irl_value;
      rec.regret = regret(mdp, family.table(out.reward_params), out.protagonist);
    }
    const RewardTable chosen = family.table(out.reward_params);
    const double kl = max_visited_kl(mdp, out.antagonist, out.antagonist, out.protagonist);
    const double c = std::isfinite(kl) ? cfg.kl_scale * kl : 0.0;
    rec.j_pagar = j_pagar_r1_exact(mdp, chosen, out.protagonist, out.antagonist, -c) +
                  j_pagar_r2_exact(mdp, chosen, out.protagonist, out.antagonist, c);

    out.lambda = lambda_update(out.lambda, cfg.mu, rec.irl_value, cfg.delta,
                               cfg.lambda_floor ? std::optional<double>(cfg.lambda0) : std::nullopt);
    rec.lambda = out.lambda;
    rec.reward_params = out.reward_params;
    for (const auto& [name, fn] : task.metrics) rec.metrics.push_back(fn(out.protagonist));
    out.trace.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace pagar
