#pragma once

// Exact tabular MDP machinery. Everything here is deterministic and works on
// dense Eigen tables; the state spaces this library targets are tiny.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pagar {

using Vector = Eigen::VectorXd;
// Row-major so that a (state, action) table flattens to index s * A + a.
using Table = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RewardTable = Table;

inline constexpr double kProbabilityTolerance = 1e-12;
inline constexpr std::size_t kNoAction = std::numeric_limits<std::size_t>::max();

// Finite MDP with an explicit evaluation mode. `transition` has one row per
// (state, action) pair, row index s * n_actions + a, one column per next state.
//
// Terminal states self-loop in the stored tensor. During evaluation an episode
// that reaches a terminal state collects that state's reward once and then
// stops, which is what "absorbing with zero reward" amounts to.
//
// Optional action availability: states where only some actions exist (the
// rest are still given valid transition rows but policies put no mass there).
class TabularMdp {
 public:
  TabularMdp(std::size_t n_states, std::size_t n_actions, Table transition, Vector initial,
             std::vector<bool> terminal, double gamma, std::optional<std::size_t> horizon = std::nullopt,
             std::vector<bool> available = {});

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  std::size_t n_pairs() const noexcept { return n_states_ * n_actions_; }
  double gamma() const noexcept { return gamma_; }
  const std::optional<std::size_t>& horizon() const noexcept { return horizon_; }
  bool finite_horizon() const noexcept { return horizon_.has_value(); }

  const Table& transition() const noexcept { return transition_; }
  // Same as transition() with terminal-state rows zeroed: the mass that keeps
  // the episode alive after acting in a state.
  const Table& continuation() const noexcept { return continuation_; }
  double prob(std::size_t s, std::size_t a, std::size_t next) const { return transition_(s * n_actions_ + a, next); }

  const Vector& initial() const noexcept { return initial_; }
  bool terminal(std::size_t s) const { return terminal_[s]; }
  const std::vector<bool>& terminal_mask() const noexcept { return terminal_; }

  bool available(std::size_t s, std::size_t a) const { return available_[s * n_actions_ + a]; }
  const std::vector<bool>& availability() const noexcept { return available_; }
  std::size_t n_available(std::size_t s) const;
  bool is_decision_state(std::size_t s) const { return n_available(s) > 1; }

  TabularMdp with_gamma(double gamma) const;
  TabularMdp with_horizon(std::optional<std::size_t> horizon) const;

 private:
  void validate() const;

  std::size_t n_states_;
  std::size_t n_actions_;
  Table transition_;
  Table continuation_;
  Vector initial_;
  std::vector<bool> terminal_;
  double gamma_;
  std::optional<std::size_t> horizon_;
  std::vector<bool> available_;
};

// Logit-parameterized stochastic policy. A logit of -infinity gives an action
// exactly zero probability, which is how unavailable actions and deterministic
// vertices are represented.
class SoftPolicy {
 public:
  SoftPolicy() = default;
  explicit SoftPolicy(Table logits);

  static SoftPolicy uniform(const TabularMdp& mdp);
  static SoftPolicy deterministic(const TabularMdp& mdp, std::span<const std::size_t> actions);
  // Logits are log-probabilities; zeros become -infinity.
  static SoftPolicy from_probabilities(const Table& probs);

  const Table& logits() const noexcept { return logits_; }
  const Table& probs() const noexcept { return probs_; }
  double prob(std::size_t s, std::size_t a) const { return probs_(s, a); }
  std::size_t n_states() const noexcept { return static_cast<std::size_t>(logits_.rows()); }
  std::size_t n_actions() const noexcept { return static_cast<std::size_t>(logits_.cols()); }

  void set_logits(Table logits);

  // Shape matches and no mass sits on unavailable actions.
  bool valid_for(const TabularMdp& mdp) const;

 private:
  Table logits_;
  Table probs_;
};

struct Step {
  std::size_t state = 0;
  std::size_t action = kNoAction;  // kNoAction: the trajectory stops at this state
};

struct Trajectory {
  std::vector<Step> steps;
  std::size_t size() const noexcept { return steps.size(); }
};

struct ValueBundle {
  Table soft_q;
  Vector soft_v;
  Table soft_advantage;
  Table hard_q;
  Vector hard_v;
  Table hard_advantage;
};

// One time slice of an exact policy evaluation. Infinite-horizon mode uses a
// single slice whose weight is the full discounted occupancy; finite-horizon
// mode has one slice per step with weight gamma^t * Prob(s_t = s, alive).
struct EvaluationLayer {
  Vector weight;
  ValueBundle values;
};

struct PolicyEvaluation {
  std::vector<EvaluationLayer> layers;
  double entropy_weight = 1.0;
  double utility = 0.0;  // U_r(pi)
  double entropy = 0.0;  // discounted policy entropy
  double objective() const { return utility + entropy_weight * entropy; }
};

struct SolverOptions {
  double tolerance = 1e-10;
  std::size_t max_sweeps = 100000;
  double entropy_weight = 1.0;  // temperature of the soft solver
};

struct SoftSolution {
  ValueBundle values;  // time-zero values in finite-horizon mode
  SoftPolicy policy;
  double residual = 0.0;
  std::size_t sweeps = 0;
  double start_value = 0.0;  // initial-distribution average of soft_v
};

struct HardSolution {
  Vector value;  // time-zero optimal values
  SoftPolicy policy;
  std::vector<std::size_t> actions;
  double residual = 0.0;
  std::size_t sweeps = 0;
  double start_value = 0.0;  // max over policies of U_r
};

struct Occupancy {
  Vector state;        // rho(s)
  Table state_action;  // rho(s, a) = rho(s) pi(a|s)
};

// Per-state Shannon entropy of the action distribution.
Vector state_entropy(const SoftPolicy& policy);
// Reward averaged over the policy's action choice, per state.
Vector policy_reward(const RewardTable& reward, const SoftPolicy& policy);
// Alive-state transition kernel under the policy (rows of terminal states are zero).
Table state_kernel(const TabularMdp& mdp, const SoftPolicy& policy);

PolicyEvaluation evaluate_policy(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy,
                                 double entropy_weight = 1.0);

double policy_utility(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy);
double policy_entropy(const TabularMdp& mdp, const SoftPolicy& policy);
Occupancy occupancy(const TabularMdp& mdp, const SoftPolicy& policy);

SoftSolution soft_value_iteration(const TabularMdp& mdp, const RewardTable& reward, const SolverOptions& opts = {});
HardSolution hard_value_iteration(const TabularMdp& mdp, const RewardTable& reward, const SolverOptions& opts = {});

// Max-norm residual of the soft Bellman operator at the given values.
double soft_bellman_residual(const TabularMdp& mdp, const RewardTable& reward, const Vector& soft_v,
                             double entropy_weight = 1.0);

std::vector<Trajectory> sample_trajectories(const TabularMdp& mdp, const SoftPolicy& policy, std::size_t n,
                                            std::size_t max_len, std::uint64_t seed);

// Probability that a rollout contains `target` among its first `horizon` states.
double visit_probability(const TabularMdp& mdp, const SoftPolicy& policy, std::size_t target, std::size_t horizon);

// Discounted return of one trajectory. A final step without an action pays the
// mean reward over the state's available actions.
double trajectory_return(const TabularMdp& mdp, const RewardTable& reward, const Trajectory& traj);

// Trajectory is consistent with the MDP: valid indices, available actions,
// nonzero-probability transitions, nothing after a terminal state.
bool trajectory_valid(const TabularMdp& mdp, const Trajectory& traj);

// Portable uniform double in [0, 1) from a 64-bit engine output.
inline double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace pagar
