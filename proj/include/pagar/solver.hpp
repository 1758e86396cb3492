#pragma once

// Protagonist/antagonist regret, the adversarial reward search constrained by
// the IRL objective, the reward-improvement bound losses and the training
// loop, plus an exhaustive minimax-regret oracle.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pagar/irl.hpp"
#include "pagar/mdp.hpp"
#include "pagar/policy_opt.hpp"
#include "pagar/reward.hpp"
#include "pagar/task.hpp"

namespace pagar {

struct RegretReport {
  double regret = 0.0;
  double antagonist_utility = 0.0;  // max over policies of U_r
  double protagonist_utility = 0.0;
  Vector witness_reward_params;
};

RegretReport regret(const TabularMdp& mdp, const RewardPoint& reward, const SoftPolicy& protagonist,
                    const SolverOptions& opts = {});
double regret(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist);

// U[i][j] = utility of policies[i] under rewards[j], via occupancy dot products.
Table utility_matrix(const TabularMdp& mdp, std::span<const RewardTable> rewards, std::span<const SoftPolicy> policies,
                     std::size_t workers = 1);
// max over policies of U_r for every reward.
Vector optimal_utilities(const TabularMdp& mdp, std::span<const RewardTable> rewards);
std::vector<RewardTable> reward_tables(std::span<const RewardPoint> points);

struct MinimaxResult {
  std::size_t policy_index = 0;
  SoftPolicy policy;
  double worst_regret = 0.0;
  std::size_t witness_reward = 0;       // reward attaining the worst regret
  std::vector<double> max_regret;       // per policy, over the reward grid
};

inline constexpr std::size_t kMaxRegretEvaluations = 10000000;

// Exact argmin over the policy grid of the max over the reward grid of the
// regret. Ties go to the lowest policy index.
MinimaxResult minimax_regret_bruteforce(const TabularMdp& mdp, std::span<const RewardPoint> rewards,
                                        std::span<const SoftPolicy> policies, std::size_t workers = 1);
// Same from a precomputed regret matrix (rows: policies, columns: rewards).
MinimaxResult minimax_from_regrets(const Table& regrets);

// Max over sampled states of KL(antagonist || protagonist).
double max_sampled_kl(std::span<const Trajectory> samples, const SoftPolicy& antagonist,
                      const SoftPolicy& protagonist);
// Max over every state with positive occupancy under `visitor`.
double max_visited_kl(const TabularMdp& mdp, const SoftPolicy& visitor, const SoftPolicy& antagonist,
                      const SoftPolicy& protagonist);

// E_{antagonist}[sum_t gamma^t (xi - 1) r] + c1 * max|r|, xi = protagonist / antagonist.
// Finite-horizon tasks divide each sampled trajectory's sum by its length.
double j_pagar_r1(const TabularMdp& mdp, const RewardTable& reward, std::span<const Trajectory> antagonist_samples,
                  const SoftPolicy& protagonist, const SoftPolicy& antagonist, double c1);
// E_{protagonist}[sum_t gamma^t (1 - antagonist / protagonist) r] + c2 * max|r|.
double j_pagar_r2(const TabularMdp& mdp, const RewardTable& reward, std::span<const Trajectory> protagonist_samples,
                  const SoftPolicy& protagonist, const SoftPolicy& antagonist, double c2);
// Exact expectations; max|r| runs over pairs the sampling policy can visit.
double j_pagar_r1_exact(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                        const SoftPolicy& antagonist, double c1);
double j_pagar_r2_exact(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& protagonist,
                        const SoftPolicy& antagonist, double c2);

// Rewards above this magnitude are rejected by the exp(r) ratio terms.
inline constexpr double kMaxExpReward = 50.0;

// E_P[sum gamma^t r] - E_A[sum gamma^t min(xi3 r, clip(xi3) r)], xi3 = exp(r) / antagonist.
double j_pagar_r3(const TabularMdp& mdp, const RewardTable& reward, std::span<const Trajectory> protagonist_samples,
                  std::span<const Trajectory> antagonist_samples, const SoftPolicy& antagonist, double clip);
// Same with protagonist samples in both terms and xi4 = exp(r) / protagonist.
double j_pagar_r4(const TabularMdp& mdp, const RewardTable& reward, std::span<const Trajectory> protagonist_samples,
                  const SoftPolicy& protagonist, double clip);
// Unclipped counterpart of the second term of r3: E_A[sum gamma^t xi3 r].
double j_pagar_r3_unclipped_term(const TabularMdp& mdp, const RewardTable& reward,
                                 std::span<const Trajectory> antagonist_samples, const SoftPolicy& antagonist);
double j_pagar_r3_clipped_term(const TabularMdp& mdp, const RewardTable& reward,
                               std::span<const Trajectory> antagonist_samples, const SoftPolicy& antagonist,
                               double clip);

// lambda * exp(mu * (delta - irl_value)), optionally floored.
double lambda_update(double lambda, double mu, double irl_value, double delta,
                     std::optional<double> floor = std::nullopt);

// Exact evaluation of both performance-difference bounds for a policy pair
// where `reference` is soft-optimal under the reward.
struct BoundCheck {
  double utility_gap = 0.0;          // U(policy) - U(reference)
  double own_state_estimate = 0.0;   // sum_t gamma^t E_{s ~ policy}[dA]
  double ref_state_estimate = 0.0;   // sum_t gamma^t E_{s ~ reference}[dA]
  double own_error = 0.0;
  double ref_error = 0.0;
  double own_bound = 0.0;            // 2 a g e / (1 - g)^2
  double ref_bound = 0.0;            // 2 a g (2a + 1) e / (1 - g)^2
  double tv = 0.0;                   // a
  double max_advantage = 0.0;        // e
  bool holds(double slack = 1e-8) const { return own_error <= own_bound + slack && ref_error <= ref_bound + slack; }
};

BoundCheck theorem2_check(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy,
                          const SoftPolicy& reference, double entropy_weight = 1.0);

enum class AntagonistMode { gradient, exact };
enum class RewardSearch { global, gradient };
const char* to_string(AntagonistMode mode);
const char* to_string(RewardSearch mode);
AntagonistMode antagonist_mode_from_string(const std::string& name);
RewardSearch reward_search_from_string(const std::string& name);

struct PagarConfig {
  double delta = 0.0;
  double lambda0 = 1e3;
  double mu = 0.0;
  bool lambda_floor = false;         // keep lambda >= lambda0
  SurrogateConfig surrogate;
  std::size_t iterations = 1000;
  std::size_t protagonist_batch = 16;
  std::size_t antagonist_batch = 16;
  std::size_t max_trajectory_length = 50;  // infinite-horizon rollouts
  std::uint64_t seed = 0;
  IrlMode irl_mode = IrlMode::trajectory;
  FitOptions irl_fit;

  double entropy_weight = 0.01;      // policy entropy bonus
  double step_size = 0.5;            // protagonist step at iteration 0
  double clip_norm = 1e3;
  bool exact_surrogate = false;      // exact expectation instead of samples

  AntagonistMode antagonist = AntagonistMode::gradient;
  std::size_t antagonist_steps = 5;
  double antagonist_step_size = 2.0;

  RewardSearch reward_search = RewardSearch::global;
  std::size_t reward_grid_resolution = 21;
  double reward_step_size = 0.05;
  double kl_scale = 1.0;             // c in C1 = -c D, C2 = c D
  bool use_r3 = false;
  bool use_r4 = false;

  void validate() const;
};

// Reward-side loss J_PAGAR(r) + lambda * max(delta - J_IRL(r), 0) with frozen samples.
struct RewardLossInputs {
  const TabularMdp* mdp = nullptr;
  const RewardFamily* family = nullptr;
  const SoftPolicy* protagonist = nullptr;
  const SoftPolicy* antagonist = nullptr;
  std::span<const Trajectory> protagonist_samples;
  std::span<const Trajectory> antagonist_samples;
  std::function<double(const Vector&)> irl_objective;
  double lambda = 0.0;
};

struct RewardLoss {
  double j_pagar = 0.0;
  double irl_value = 0.0;
  double penalty = 0.0;
  double total() const { return j_pagar + penalty; }
};

RewardLoss reward_loss(const RewardLossInputs& in, const Vector& params, const PagarConfig& cfg);

struct RewardStep {
  Vector params;
  Vector gradient;
  RewardLoss before;
  RewardLoss after;
  std::size_t halvings = 0;
};

// One projected finite-difference descent step with step halving.
RewardStep reward_step(const RewardLossInputs& in, const Vector& params, const PagarConfig& cfg);

struct TrainRecord {
  std::size_t iteration = 0;
  double lambda = 0.0;
  double irl_value = 0.0;
  double j_pagar = 0.0;
  double regret = 0.0;  // exact regret of the protagonist under the chosen reward
  std::vector<double> metrics;
  std::size_t saturated_ratios = 0;
  Vector reward_params;
};

struct TrainTrace {
  std::vector<std::string> metric_names;
  std::vector<TrainRecord> records;
};

struct TrainResult {
  SoftPolicy protagonist;
  SoftPolicy antagonist;
  Vector reward_params;
  double lambda = 0.0;
  TrainTrace trace;
};

TrainResult train(const TabularMdp& mdp, const RewardFamily& family, const DemoSet& demos, const TaskSpec& task,
                  const PagarConfig& cfg);
// Same with a prebuilt IRL objective (shared across sweep points).
TrainResult train(const TabularMdp& mdp, const RewardFamily& family, const std::function<double(const Vector&)>& irl,
                  const TaskSpec& task, const PagarConfig& cfg);

}  // namespace pagar
