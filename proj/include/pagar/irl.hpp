#pragma once

// Maximum-entropy IRL objectives over a parametric reward family.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pagar/mdp.hpp"
#include "pagar/reward.hpp"

namespace pagar {

enum class IrlMode {
  margin,      // U_r(E) - max_pi U_r(pi)
  maxent,      // U_r(E) - max_pi (U_r(pi) + H(pi))
  trajectory,  // demo log-likelihood under P(tau) ~ exp(return), anchored at its maximum
};

const char* to_string(IrlMode mode);
IrlMode irl_mode_from_string(const std::string& name);

struct DemoSet {
  std::vector<Trajectory> trajectories;
  std::vector<double> weights;  // empty means uniform

  DemoSet() = default;
  DemoSet(std::vector<Trajectory> trajs, std::vector<double> w = {});
  double weight(std::size_t i) const;
  std::size_t size() const noexcept { return trajectories.size(); }
  void validate(const TabularMdp& mdp) const;
};

// Weighted mean discounted return of the demonstrations.
double demo_utility(const TabularMdp& mdp, const RewardTable& reward, const DemoSet& demos);

// Every trajectory of at most `horizon` states that starts in the initial
// support, takes available actions and follows nonzero transitions. Each
// trajectory acts in its final state. Guarded at 10^6 trajectories.
struct EnumeratedTrajectory {
  Trajectory trajectory;
  double log_dynamics = 0.0;  // log d0(s0) + sum log P(s_{t+1} | s_t, a_t)
};
std::vector<EnumeratedTrajectory> enumerate_trajectories(const TabularMdp& mdp, std::size_t horizon);

inline constexpr std::size_t kMaxEnumeratedTrajectories = 1000000;

// Mean log-probability of the demos under P(tau) ~ exp(return(tau)) * dynamics(tau),
// normalized over every trajectory of the given horizon.
double trajectory_maxent_loglik(const TabularMdp& mdp, const RewardTable& reward, const DemoSet& demos,
                                std::size_t horizon);

struct FitOptions {
  std::size_t grid_resolution = 101;
  std::size_t max_refine_iterations = 200;
  double fd_step = 1e-6;
  double min_step = 1e-9;
};

// The IRL objective as a callable over reward parameters. Trajectory mode is
// anchored so that its maximum equals the smallest achievable negative mean
// log-likelihood: J(params) = 2 * nll* - nll(params).
class IrlObjective {
 public:
  IrlObjective(TabularMdp mdp, RewardFamily family, DemoSet demos, IrlMode mode, FitOptions fit = {});

  double operator()(const Vector& params) const;
  // Raw objective before anchoring (identical except in trajectory mode).
  double raw(const Vector& params) const;

  IrlMode mode() const noexcept { return mode_; }
  double anchor() const noexcept { return anchor_; }
  const TabularMdp& mdp() const noexcept { return mdp_; }
  const RewardFamily& family() const noexcept { return family_; }
  const DemoSet& demos() const noexcept { return demos_; }

 private:
  TabularMdp mdp_;
  RewardFamily family_;
  DemoSet demos_;
  IrlMode mode_;
  std::vector<EnumeratedTrajectory> paths_;
  double anchor_ = 0.0;
};

// Policy-level objective for a single reward table (margin or maxent mode).
double irl_loss(const TabularMdp& mdp, const RewardTable& reward, const DemoSet& demos, IrlMode mode);
// Family/parameter form; trajectory mode fits the anchor first.
double irl_loss(const TabularMdp& mdp, const RewardFamily& family, const Vector& params, const DemoSet& demos,
                IrlMode mode);

struct IrlReport {
  Vector best_params;
  double best_loss = 0.0;  // delta* = max of the objective
  std::vector<std::pair<Vector, double>> loss_curve;
  SoftPolicy soft_opt_policy;
  bool converged = true;
  std::size_t evaluations = 0;
};

// Generic maximizer: grid scan (dim <= 3) then finite-difference ascent with
// step halving, projected to the box. `max_evaluations` = 0 means unlimited.
IrlReport maximize_over_family(const RewardFamily& family, const std::function<double(const Vector&)>& f,
                               const FitOptions& opts, std::size_t max_evaluations = 0);

IrlReport irl_fit(const TabularMdp& mdp, const RewardFamily& family, const DemoSet& demos, IrlMode mode,
                  const FitOptions& opts = {}, std::size_t max_evaluations = 0);

}  // namespace pagar
