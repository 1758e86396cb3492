#pragma once

// Gradient ascent on logit-parameterized policies: the entropy-regularized RL
// objective and the clipped importance-sampled surrogate that lets the
// protagonist learn from the antagonist's samples.

#include <span>

#include "pagar/mdp.hpp"

namespace pagar {

struct OptimizerState {
  double step_size = 1.0;
  double clip_norm = 1e3;  // gradients above this norm are rescaled
  std::size_t iteration = 0;
};

struct StepInfo {
  double objective_before = 0.0;
  double objective_after = 0.0;
  double gradient_norm = 0.0;
  double step_taken = 0.0;
  std::size_t halvings = 0;
  bool clipped = false;
  bool accepted = false;
};

struct SurrogateConfig {
  double clip = 0.2;  // sigma

  void validate() const;
};

// Importance ratios are clipped to this range before use.
inline constexpr double kMinRatio = 1e-6;
inline constexpr double kMaxRatio = 1e6;

// U_r(pi) + w * H(pi); w = 1 is the standard soft objective.
double rl_objective(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy,
                    double entropy_weight = 1.0);
// Exact gradient with respect to the logits (zero on unavailable actions).
Table rl_gradient(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy,
                  double entropy_weight = 1.0);
SoftPolicy rl_gradient_step(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy,
                            OptimizerState& opt, double entropy_weight = 1.0, StepInfo* info = nullptr);

// Sample estimate of E_{s,a ~ antagonist}[sum_t gamma^t min(xi A, clip(xi) A)],
// xi = protagonist / antagonist, A = antagonist's hard advantage.
double offpolicy_surrogate(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                           const SoftPolicy& antagonist, std::span<const Trajectory> antagonist_samples,
                           const SurrogateConfig& cfg);
// Same expectation computed exactly from the antagonist's occupancy.
double offpolicy_surrogate_exact(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                                 const SoftPolicy& antagonist, const SurrogateConfig& cfg);
// Exact expectation without clipping: E[xi A].
double offpolicy_unclipped_exact(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                                 const SoftPolicy& antagonist);

// Gradients with respect to the protagonist's logits. An empty sample span
// selects the exact expectation.
Table offpolicy_surrogate_gradient(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                                   const SoftPolicy& antagonist, std::span<const Trajectory> antagonist_samples,
                                   const SurrogateConfig& cfg);

// One ascent step on rl_objective(protagonist) + surrogate(protagonist).
// An empty sample span selects the exact surrogate.
SoftPolicy protagonist_step(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                            const SoftPolicy& antagonist, std::span<const Trajectory> antagonist_samples,
                            const SurrogateConfig& cfg, OptimizerState& opt, double entropy_weight = 1.0,
                            StepInfo* info = nullptr);

// Objective maximized by protagonist_step.
double protagonist_objective(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                             const SoftPolicy& antagonist, std::span<const Trajectory> antagonist_samples,
                             const SurrogateConfig& cfg, double entropy_weight = 1.0);

}  // namespace pagar
