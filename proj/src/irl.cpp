#include "pagar/irl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pagar/error.hpp"

namespace pagar {

namespace {

double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

void enumerate_from(const TabularMdp& mdp, std::size_t horizon, Trajectory& prefix, double log_dyn,
                    std::vector<EnumeratedTrajectory>& out) {
  const std::size_t s = prefix.steps.back().state;
  const bool last = mdp.terminal(s) || prefix.size() == horizon;
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    if (!mdp.available(s, a)) continue;
    prefix.steps.back().action = a;
    if (last) {
      if (out.size() >= kMaxEnumeratedTrajectories)
        throw GuardViolation("trajectory enumeration exceeds 10^6 trajectories");
      out.push_back({prefix, log_dyn});
      continue;
    }
    for (std::size_t next = 0; next < mdp.n_states(); ++next) {
      const double p = mdp.prob(s, a, next);
      if (p <= 0.0) continue;
      prefix.steps.push_back({next, kNoAction});
      enumerate_from(mdp, horizon, prefix, log_dyn + std::log(p), out);
      prefix.steps.pop_back();
    }
  }
  prefix.steps.back().action = kNoAction;
}

double log_dynamics(const TabularMdp& mdp, const Trajectory& traj) {
  double acc = std::log(mdp.initial()(traj.steps.front().state));
  for (std::size_t t = 0; t + 1 < traj.size(); ++t)
    acc += std::log(mdp.prob(traj.steps[t].state, traj.steps[t].action, traj.steps[t + 1].state));
  return acc;
}

// Unnormalized log-score of a demo; a final step without an action is
// marginalized over the available actions.
double demo_log_score(const TabularMdp& mdp, const RewardTable& reward, const Trajectory& traj) {
  const Step& last = traj.steps.back();
  if (last.action != kNoAction) return trajectory_return(mdp, reward, traj) + log_dynamics(mdp, traj);
  std::vector<double> options;
  Trajectory filled = traj;
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    if (!mdp.available(last.state, a)) continue;
    filled.steps.back().action = a;
    options.push_back(trajectory_return(mdp, reward, filled) + log_dynamics(mdp, filled));
  }
  return log_sum_exp(options);
}

double loglik_with_paths(const TabularMdp& mdp, const RewardTable& reward, const DemoSet& demos,
                         const std::vector<EnumeratedTrajectory>& paths) {
  std::vector<double> scores;
  scores.reserve(paths.size());
  for (const auto& p : paths) scores.push_back(trajectory_return(mdp, reward, p.trajectory) + p.log_dynamics);
  const double log_z = log_sum_exp(scores);
  double total = 0.0;
  for (std::size_t i = 0; i < demos.size(); ++i)
    total += demos.weight(i) * (demo_log_score(mdp, reward, demos.trajectories[i]) - log_z);
  return total;
}

std::size_t trajectory_horizon(const TabularMdp& mdp) {
  if (!mdp.horizon()) throw InvalidArgument("trajectory-mode IRL needs a finite horizon");
  return *mdp.horizon();
}

}  // namespace

const char* to_string(IrlMode mode) {
  switch (mode) {
    case IrlMode::margin: return "margin";
    case IrlMode::maxent: return "maxent";
    case IrlMode::trajectory: return "trajectory";
  }
  return "?";
}

IrlMode irl_mode_from_string(const std::string& name) {
  if (name == "margin") return IrlMode::margin;
  if (name == "maxent") return IrlMode::maxent;
  if (name == "trajectory") return IrlMode::trajectory;
  throw InvalidArgument("unknown IRL mode '" + name + "'");
}

DemoSet::DemoSet(std::vector<Trajectory> trajs, std::vector<double> w)
    : trajectories(std::move(trajs)), weights(std::move(w)) {
  require(!trajectories.empty(), "demonstration set is empty");
  if (!weights.empty()) {
    require(weights.size() == trajectories.size(), "one weight per demonstration required");
    double total = 0.0;
    for (double x : weights) {
      require(x >= 0.0 && std::isfinite(x), "demo weights must be non-negative");
      total += x;
    }
    require(total > 0.0, "demo weights sum to zero");
    for (double& x : weights) x /= total;
  }
}

double DemoSet::weight(std::size_t i) const {
  return weights.empty() ? 1.0 / static_cast<double>(trajectories.size()) : weights[i];
}

void DemoSet::validate(const TabularMdp& mdp) const {
  require(!trajectories.empty(), "demonstration set is empty");
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    require(trajectory_valid(mdp, trajectories[i]), "demonstration " + std::to_string(i) + " is not feasible");
}

double demo_utility(const TabularMdp& mdp, const RewardTable& reward, const DemoSet& demos) {
  double total = 0.0;
  for (std::size_t i = 0; i < demos.size(); ++i)
    total += demos.weight(i) * trajectory_return(mdp, reward, demos.trajectories[i]);
  return total;
}

std::vector<EnumeratedTrajectory> enumerate_trajectories(const TabularMdp& mdp, std::size_t horizon) {
  require(horizon >= 1, "horizon must be at least 1");
  std::vector<EnumeratedTrajectory> out;
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (mdp.initial()(s) <= 0.0) continue;
    Trajectory prefix{{{s, kNoAction}}};
    enumerate_from(mdp, horizon, prefix, std::log(mdp.initial()(s)), out);
  }
  return out;
}

double trajectory_maxent_loglik(const TabularMdp& mdp, const RewardTable& reward, const DemoSet& demos,
                                std::size_t horizon) {
  demos.validate(mdp);
  for (const auto& d : demos.trajectories) {
    const std::size_t last = d.steps.back().state;
    require(d.size() <= horizon, "demonstration longer than the horizon");
    require(d.size() == horizon || mdp.terminal(last), "demonstration ends before the horizon without terminating");
  }
  return loglik_with_paths(mdp, reward, demos, enumerate_trajectories(mdp, horizon));
}

double irl_loss(const TabularMdp& mdp, const RewardTable& reward, const DemoSet& demos, IrlMode mode) {
  const double u_demo = demo_utility(mdp, reward, demos);
  switch (mode) {
    case IrlMode::margin: return u_demo - hard_value_iteration(mdp, reward).start_value;
    case IrlMode::maxent: return u_demo - soft_value_iteration(mdp, reward).start_value;
    case IrlMode::trajectory: break;
  }
  throw InvalidArgument("trajectory mode needs the reward family to locate its anchor");
}

double irl_loss(const TabularMdp& mdp, const RewardFamily& family, const Vector& params, const DemoSet& demos,
                IrlMode mode) {
  const RewardPoint point = materialize(family, params);
  if (mode != IrlMode::trajectory) return irl_loss(mdp, point.table, demos, mode);
  return IrlObjective(mdp, family, demos, mode)(params);
}

IrlObjective::IrlObjective(TabularMdp mdp, RewardFamily family, DemoSet demos, IrlMode mode, FitOptions fit)
    : mdp_(std::move(mdp)), family_(std::move(family)), demos_(std::move(demos)), mode_(mode) {
  demos_.validate(mdp_);
  if (mode_ != IrlMode::trajectory) return;
  const std::size_t horizon = trajectory_horizon(mdp_);
  for (const auto& d : demos_.trajectories)
    require(d.size() == horizon || mdp_.terminal(d.steps.back().state),
            "demonstration ends before the horizon without terminating");
  paths_ = enumerate_trajectories(mdp_, horizon);
  const IrlReport best = maximize_over_family(family_, [this](const Vector& p) { return raw(p); }, fit);
  anchor_ = -best.best_loss;
}

double IrlObjective::raw(const Vector& params) const {
  const RewardTable r = family_.table(family_.project(params));
  if (mode_ == IrlMode::trajectory) return loglik_with_paths(mdp_, r, demos_, paths_);
  return irl_loss(mdp_, r, demos_, mode_);
}

double IrlObjective::operator()(const Vector& params) const {
  const double v = raw(params);
  return mode_ == IrlMode::trajectory ? 2.0 * anchor_ + v : v;
}

IrlReport maximize_over_family(const RewardFamily& family, const std::function<double(const Vector&)>& f,
                               const FitOptions& opts, std::size_t max_evaluations) {
  IrlReport rep;
  const std::size_t d = family.param_dim();
  auto budget_left = [&] { return max_evaluations == 0 || rep.evaluations < max_evaluations; };
  auto eval = [&](const Vector& p) {
    ++rep.evaluations;
    return f(p);
  };

  rep.best_params = family.center();
  rep.best_loss = eval(rep.best_params);
  if (d == 0) return rep;

  double spacing = 0.0;
  if (d <= kMaxGridDim) {
    // Keep the scan near 2*10^4 points regardless of dimension.
    std::size_t res = std::max<std::size_t>(2, opts.grid_resolution);
    while (res > 2 && std::pow(static_cast<double>(res), static_cast<double>(d)) > 2.0e4) --res;
    for (const Vector& p : family.grid(res)) {
      if (!budget_left()) break;
      const double v = eval(p);
      rep.loss_curve.emplace_back(p, v);
      if (v > rep.best_loss) {
        rep.best_loss = v;
        rep.best_params = p;
      }
    }
    spacing = 1.0 / static_cast<double>(res - 1);
  } else {
    spacing = 0.1;
  }

  double width = 0.0;
  for (const auto& iv : family.box()) width = std::max(width, iv.hi - iv.lo);
  double step = spacing * width;
  Vector x = rep.best_params;
  double fx = rep.best_loss;
  rep.converged = false;
  for (std::size_t it = 0; it < opts.max_refine_iterations && budget_left(); ++it) {
    Vector g(d);
    for (std::size_t i = 0; i < d; ++i) {
      Vector hi = x, lo = x;
      hi(i) = std::min(x(i) + opts.fd_step, family.box()[i].hi);
      lo(i) = std::max(x(i) - opts.fd_step, family.box()[i].lo);
      g(i) = hi(i) > lo(i) ? (eval(hi) - eval(lo)) / (hi(i) - lo(i)) : 0.0;
    }
    // Drop components pushing against an active bound.
    for (std::size_t i = 0; i < d; ++i) {
      if ((x(i) >= family.box()[i].hi && g(i) > 0) || (x(i) <= family.box()[i].lo && g(i) < 0)) g(i) = 0.0;
    }
    const double gn = g.norm();
    if (gn == 0.0) {
      rep.converged = true;
      break;
    }
    bool moved = false;
    while (step >= opts.min_step && budget_left()) {
      const Vector cand = family.project(x + step * g / gn);
      const double fc = eval(cand);
      if (fc > fx) {
        x = cand;
        fx = fc;
        moved = true;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      rep.converged = step < opts.min_step;
      break;
    }
  }
  rep.best_params = x;
  rep.best_loss = fx;
  return rep;
}

IrlReport irl_fit(const TabularMdp& mdp, const RewardFamily& family, const DemoSet& demos, IrlMode mode,
                  const FitOptions& opts, std::size_t max_evaluations) {
  IrlReport rep;
  if (mode == IrlMode::trajectory) {
    const IrlObjective objective(mdp, family, demos, mode, opts);
    rep = maximize_over_family(family, [&](const Vector& p) { return objective(p); }, opts, max_evaluations);
  } else {
    demos.validate(mdp);
    rep = maximize_over_family(
        family, [&](const Vector& p) { return irl_loss(mdp, family.table(p), demos, mode); }, opts, max_evaluations);
  }
  rep.soft_opt_policy = soft_value_iteration(mdp, family.table(rep.best_params)).policy;
  return rep;
}

}  // namespace pagar
