#include "pagar/policy_opt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "pagar/error.hpp"

namespace pagar {

namespace {

struct ClipTerm {
  double value = 0.0;
  double slope = 0.0;  // d value / d xi (zero on the clipped branch)
};

ClipTerm clipped_term(double xi, double adv, double sigma) {
  const double raw = xi * adv;
  const double clipped = std::clamp(xi, 1.0 - sigma, 1.0 + sigma) * adv;
  if (raw <= clipped) return {raw, adv};
  return {clipped, 0.0};
}

struct Ratio {
  double value = 1.0;
  bool saturated = false;
};

Ratio ratio(const SoftPolicy& protagonist, const SoftPolicy& antagonist, std::size_t s, std::size_t a) {
  const double pa = antagonist.prob(s, a);
  const double raw = pa > 0.0 ? protagonist.prob(s, a) / pa : kMaxRatio;
  const double clipped = std::clamp(raw, kMinRatio, kMaxRatio);
  return {clipped, clipped != raw};
}

// Layer index for step t: finite horizon uses one layer per step.
std::size_t layer_for(const PolicyEvaluation& ev, std::size_t t) {
  return ev.layers.size() == 1 ? 0 : std::min(t, ev.layers.size() - 1);
}

// Visits every antagonist-weighted (layer, s, a, weight) term: either sample
// steps (weight gamma^t / n) or exact occupancy mass.
void for_each_term(const TabularMdp& mdp, const PolicyEvaluation& ev, const SoftPolicy& antagonist,
                   std::span<const Trajectory> samples,
                   const std::function<void(std::size_t, std::size_t, std::size_t, double)>& fn) {
  if (samples.empty()) {
    for (std::size_t l = 0; l < ev.layers.size(); ++l)
      for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        const double w = ev.layers[l].weight(s);
        if (w == 0.0) continue;
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
          const double p = antagonist.prob(s, a);
          if (p > 0.0) fn(l, s, a, w * p);
        }
      }
    return;
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (const Trajectory& traj : samples) {
    double discount = 1.0;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const Step& st = traj.steps[t];
      if (st.action != kNoAction) fn(layer_for(ev, t), st.state, st.action, discount * inv_n);
      discount *= mdp.gamma();
    }
  }
}

SoftPolicy apply_step(const SoftPolicy& policy, const Table& direction, double step) {
  Table logits = policy.logits();
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    if (std::isfinite(logits.data()[i])) logits.data()[i] += step * direction.data()[i];
  return SoftPolicy(std::move(logits));
}

// Gradient ascent step with norm clipping and step halving. Accepted steps
// never lower the objective by more than 1e-12.
SoftPolicy ascend(const SoftPolicy& policy, const Table& gradient, const std::function<double(const SoftPolicy&)>& f,
                  OptimizerState& opt, StepInfo* info) {
  require(opt.step_size > 0.0, "step size must be positive");
  StepInfo local;
  local.objective_before = f(policy);
  local.objective_after = local.objective_before;
  Table g = gradient;
  if (!g.allFinite()) {
    g = g.unaryExpr([](double x) { return std::isfinite(x) ? x : 0.0; });
    local.clipped = true;
  }
  local.gradient_norm = g.norm();
  if (local.gradient_norm > opt.clip_norm) {
    g *= opt.clip_norm / local.gradient_norm;
    local.clipped = true;
  }
  SoftPolicy out = policy;
  if (g.norm() > 0.0) {
    double step = opt.step_size;
    for (std::size_t h = 0; h < 40; ++h, step *= 0.5) {
      SoftPolicy cand = apply_step(policy, g, step);
      const double fc = f(cand);
      if (fc >= local.objective_before - 1e-12) {
        out = std::move(cand);
        local.objective_after = fc;
        local.step_taken = step;
        local.halvings = h;
        local.accepted = true;
        break;
      }
    }
  }
  ++opt.iteration;
  if (info) *info = local;
  return out;
}

}  // namespace

void SurrogateConfig::validate() const { require(clip > 0.0 && clip < 1.0, "clip threshold must lie in (0, 1)"); }

double rl_objective(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy, double entropy_weight) {
  return evaluate_policy(mdp, reward, policy, entropy_weight).objective();
}

Table rl_gradient(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy, double entropy_weight) {
  const PolicyEvaluation ev = evaluate_policy(mdp, reward, policy, entropy_weight);
  Table g = Table::Zero(mdp.n_states(), mdp.n_actions());
  for (const auto& layer : ev.layers)
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        const double p = policy.prob(s, a);
        if (p <= 0.0) continue;
        g(s, a) += layer.weight(s) * p * (layer.values.soft_advantage(s, a) - entropy_weight * std::log(p));
      }
  return g;
}

SoftPolicy rl_gradient_step(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy,
                            OptimizerState& opt, double entropy_weight, StepInfo* info) {
  const Table g = rl_gradient(mdp, reward, policy, entropy_weight);
  return ascend(
      policy, g, [&](const SoftPolicy& p) { return rl_objective(mdp, reward, p, entropy_weight); }, opt, info);
}

double offpolicy_surrogate(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                           const SoftPolicy& antagonist, std::span<const Trajectory> antagonist_samples,
                           const SurrogateConfig& cfg) {
  cfg.validate();
  const PolicyEvaluation ev = evaluate_policy(mdp, reward, antagonist, 0.0);
  double total = 0.0;
  for_each_term(mdp, ev, antagonist, antagonist_samples, [&](std::size_t l, std::size_t s, std::size_t a, double w) {
    const double adv = ev.layers[l].values.hard_advantage(s, a);
    total += w * clipped_term(ratio(protagonist, antagonist, s, a).value, adv, cfg.clip).value;
  });
  return total;
}

double offpolicy_surrogate_exact(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                                 const SoftPolicy& antagonist, const SurrogateConfig& cfg) {
  return offpolicy_surrogate(mdp, reward, protagonist, antagonist, {}, cfg);
}

double offpolicy_unclipped_exact(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                                 const SoftPolicy& antagonist) {
  const PolicyEvaluation ev = evaluate_policy(mdp, reward, antagonist, 0.0);
  double total = 0.0;
  for_each_term(mdp, ev, antagonist, {}, [&](std::size_t l, std::size_t s, std::size_t a, double w) {
    total += w * ratio(protagonist, antagonist, s, a).value * ev.layers[l].values.hard_advantage(s, a);
  });
  return total;
}

Table offpolicy_surrogate_gradient(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                                   const SoftPolicy& antagonist, std::span<const Trajectory> antagonist_samples,
                                   const SurrogateConfig& cfg) {
  cfg.validate();
  const PolicyEvaluation ev = evaluate_policy(mdp, reward, antagonist, 0.0);
  Table g = Table::Zero(mdp.n_states(), mdp.n_actions());
  for_each_term(mdp, ev, antagonist, antagonist_samples, [&](std::size_t l, std::size_t s, std::size_t a, double w) {
    const Ratio xi = ratio(protagonist, antagonist, s, a);
    if (xi.saturated) return;
    const ClipTerm term = clipped_term(xi.value, ev.layers[l].values.hard_advantage(s, a), cfg.clip);
    if (term.slope == 0.0) return;
    // d xi / d logit(s, b) = xi * (1[b = a] - pi_P(b|s))
    for (std::size_t b = 0; b < mdp.n_actions(); ++b) {
      const double pb = protagonist.prob(s, b);
      if (pb <= 0.0 && b != a) continue;
      g(s, b) += w * term.slope * xi.value * ((b == a ? 1.0 : 0.0) - pb);
    }
  });
  return g;
}

double protagonist_objective(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                             const SoftPolicy& antagonist, std::span<const Trajectory> antagonist_samples,
                             const SurrogateConfig& cfg, double entropy_weight) {
  return rl_objective(mdp, reward, protagonist, entropy_weight) +
         offpolicy_surrogate(mdp, reward, protagonist, antagonist, antagonist_samples, cfg);
}

SoftPolicy protagonist_step(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                            const SoftPolicy& antagonist, std::span<const Trajectory> antagonist_samples,
                            const SurrogateConfig& cfg, OptimizerState& opt, double entropy_weight, StepInfo* info) {
  const Table g = rl_gradient(mdp, reward, protagonist, entropy_weight) +
                  offpolicy_surrogate_gradient(mdp, reward, protagonist, antagonist, antagonist_samples, cfg);
  return ascend(
      protagonist, g,
      [&](const SoftPolicy& p) {
        return protagonist_objective(mdp, reward, p, antagonist, antagonist_samples, cfg, entropy_weight);
      },
      opt, info);
}

}  // namespace pagar
