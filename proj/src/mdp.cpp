#include "pagar/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pagar/error.hpp"

namespace pagar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Table zero_terminal_rows(const Table& transition, const std::vector<bool>& terminal, std::size_t n_actions) {
  Table out = transition;
  for (std::size_t s = 0; s < terminal.size(); ++s) {
    if (!terminal[s]) continue;
    for (std::size_t a = 0; a < n_actions; ++a) out.row(static_cast<Eigen::Index>(s * n_actions + a)).setZero();
  }
  return out;
}

// (S*A) vector -> S x A table view helpers.
Table as_table(const Vector& flat, std::size_t rows, std::size_t cols) {
  Table t(rows, cols);
  std::copy(flat.data(), flat.data() + flat.size(), t.data());
  return t;
}

// Q(s,a) = r(s,a) + gamma * sum_s' C(s,a,s') V(s').
Table backup(const TabularMdp& mdp, const RewardTable& reward, const Vector& v) {
  const Vector next = mdp.continuation() * v;
  return reward + mdp.gamma() * as_table(next, mdp.n_states(), mdp.n_actions());
}

double log_sum_exp_row(const TabularMdp& mdp, const Table& q, std::size_t s, double temperature) {
  double m = kNegInf;
  for (std::size_t a = 0; a < mdp.n_actions(); ++a)
    if (mdp.available(s, a)) m = std::max(m, q(s, a) / temperature);
  double acc = 0.0;
  for (std::size_t a = 0; a < mdp.n_actions(); ++a)
    if (mdp.available(s, a)) acc += std::exp(q(s, a) / temperature - m);
  return temperature * (m + std::log(acc));
}

Vector soft_max_backup(const TabularMdp& mdp, const Table& q, double temperature) {
  Vector v(mdp.n_states());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) v(s) = log_sum_exp_row(mdp, q, s, temperature);
  return v;
}

SoftPolicy softmax_policy(const TabularMdp& mdp, const Table& q, double temperature) {
  Table logits(mdp.n_states(), mdp.n_actions());
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      logits(s, a) = mdp.available(s, a) ? q(s, a) / temperature : kNegInf;
  return SoftPolicy(std::move(logits));
}

// Greedy action with ties resolved toward the lowest index.
std::size_t greedy_action(const TabularMdp& mdp, const Table& q, std::size_t s) {
  std::size_t best = kNoAction;
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    if (!mdp.available(s, a)) continue;
    if (best == kNoAction || q(s, a) > q(s, best) + 1e-12) best = a;
  }
  return best;
}

Vector hard_max_backup(const TabularMdp& mdp, const Table& q) {
  Vector v(mdp.n_states());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) v(s) = q(s, greedy_action(mdp, q, s));
  return v;
}

ValueBundle make_bundle(Table soft_q, Vector soft_v, Table hard_q, Vector hard_v) {
  ValueBundle b;
  b.soft_advantage = soft_q.colwise() - soft_v;
  b.hard_advantage = hard_q.colwise() - hard_v;
  b.soft_q = std::move(soft_q);
  b.soft_v = std::move(soft_v);
  b.hard_q = std::move(hard_q);
  b.hard_v = std::move(hard_v);
  return b;
}

Vector expected_under(const Table& q, const SoftPolicy& policy) {
  Vector v(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < q.cols(); ++a) {
      const double p = policy.probs()(s, a);
      if (p > 0.0) acc += p * q(s, a);
    }
    v(s) = acc;
  }
  return v;
}

void require_solvable(const TabularMdp& mdp) {
  if (!mdp.finite_horizon() && mdp.gamma() >= 1.0)
    throw InvalidArgument("gamma = 1 requires a finite horizon");
}

void require_policy(const TabularMdp& mdp, const SoftPolicy& policy) {
  if (!policy.valid_for(mdp)) throw InvalidArgument("policy does not match the MDP");
}

std::size_t sample_index(const double* probs, std::size_t n, double u) {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions, Table transition, Vector initial,
                       std::vector<bool> terminal, double gamma, std::optional<std::size_t> horizon,
                       std::vector<bool> available)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      initial_(std::move(initial)),
      terminal_(std::move(terminal)),
      gamma_(gamma),
      horizon_(horizon),
      available_(std::move(available)) {
  if (available_.empty()) available_.assign(n_states_ * n_actions_, true);
  validate();
  continuation_ = zero_terminal_rows(transition_, terminal_, n_actions_);
}

void TabularMdp::validate() const {
  require(n_states_ > 0 && n_actions_ > 0, "MDP needs at least one state and one action");
  require(static_cast<std::size_t>(transition_.rows()) == n_pairs() &&
              static_cast<std::size_t>(transition_.cols()) == n_states_,
          "transition tensor has wrong shape");
  require(static_cast<std::size_t>(initial_.size()) == n_states_, "initial distribution has wrong size");
  require(terminal_.size() == n_states_, "terminal mask has wrong size");
  require(available_.size() == n_pairs(), "availability mask has wrong size");
  require(gamma_ >= 0.0 && gamma_ <= 1.0, "gamma must lie in [0, 1]");
  if (horizon_) require(*horizon_ >= 1, "horizon must be at least 1");
  for (Eigen::Index i = 0; i < transition_.rows(); ++i) {
    const auto row = transition_.row(i);
    require(row.allFinite() && row.minCoeff() >= 0.0, "transition probabilities must be finite and non-negative");
    require(std::abs(row.sum() - 1.0) <= kProbabilityTolerance, "transition row " + std::to_string(i) + " does not sum to 1");
  }
  require(initial_.allFinite() && initial_.minCoeff() >= 0.0, "initial distribution must be non-negative");
  require(std::abs(initial_.sum() - 1.0) <= kProbabilityTolerance, "initial distribution does not sum to 1");
  for (std::size_t s = 0; s < n_states_; ++s) {
    require(n_available(s) > 0, "state " + std::to_string(s) + " has no available action");
    if (!terminal_[s]) continue;
    for (std::size_t a = 0; a < n_actions_; ++a)
      require(std::abs(prob(s, a, s) - 1.0) <= kProbabilityTolerance,
              "terminal state " + std::to_string(s) + " must self-loop");
  }
}

std::size_t TabularMdp::n_available(std::size_t s) const {
  std::size_t n = 0;
  for (std::size_t a = 0; a < n_actions_; ++a) n += available(s, a) ? 1 : 0;
  return n;
}

TabularMdp TabularMdp::with_gamma(double gamma) const {
  return TabularMdp(n_states_, n_actions_, transition_, initial_, terminal_, gamma, horizon_, available_);
}

TabularMdp TabularMdp::with_horizon(std::optional<std::size_t> horizon) const {
  return TabularMdp(n_states_, n_actions_, transition_, initial_, terminal_, gamma_, horizon, available_);
}

SoftPolicy::SoftPolicy(Table logits) { set_logits(std::move(logits)); }

void SoftPolicy::set_logits(Table logits) {
  logits_ = std::move(logits);
  probs_.resize(logits_.rows(), logits_.cols());
  for (Eigen::Index s = 0; s < logits_.rows(); ++s) {
    const double m = logits_.row(s).maxCoeff();
    if (!std::isfinite(m)) throw InvalidArgument("policy row " + std::to_string(s) + " has no finite logit");
    double z = 0.0;
    for (Eigen::Index a = 0; a < logits_.cols(); ++a) {
      const double e = std::exp(logits_(s, a) - m);
      probs_(s, a) = e;
      z += e;
    }
    probs_.row(s) /= z;
  }
}

SoftPolicy SoftPolicy::uniform(const TabularMdp& mdp) {
  Table logits(mdp.n_states(), mdp.n_actions());
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) logits(s, a) = mdp.available(s, a) ? 0.0 : kNegInf;
  return SoftPolicy(std::move(logits));
}

SoftPolicy SoftPolicy::deterministic(const TabularMdp& mdp, std::span<const std::size_t> actions) {
  require(actions.size() == mdp.n_states(), "one action per state required");
  Table logits = Table::Constant(mdp.n_states(), mdp.n_actions(), kNegInf);
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    require(actions[s] < mdp.n_actions() && mdp.available(s, actions[s]), "deterministic action unavailable");
    logits(s, actions[s]) = 0.0;
  }
  return SoftPolicy(std::move(logits));
}

SoftPolicy SoftPolicy::from_probabilities(const Table& probs) {
  Table logits(probs.rows(), probs.cols());
  for (Eigen::Index s = 0; s < probs.rows(); ++s) {
    require(std::abs(probs.row(s).sum() - 1.0) <= 1e-9, "probability row does not sum to 1");
    for (Eigen::Index a = 0; a < probs.cols(); ++a) {
      require(probs(s, a) >= 0.0, "negative probability");
      logits(s, a) = probs(s, a) > 0.0 ? std::log(probs(s, a)) : kNegInf;
    }
  }
  return SoftPolicy(std::move(logits));
}

bool SoftPolicy::valid_for(const TabularMdp& mdp) const {
  if (n_states() != mdp.n_states() || n_actions() != mdp.n_actions()) return false;
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      if (!mdp.available(s, a) && probs_(s, a) > 0.0) return false;
  return true;
}

Vector state_entropy(const SoftPolicy& policy) {
  const Table& p = policy.probs();
  Vector h(p.rows());
  for (Eigen::Index s = 0; s < p.rows(); ++s) {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < p.cols(); ++a)
      if (p(s, a) > 0.0) acc -= p(s, a) * std::log(p(s, a));
    h(s) = acc;
  }
  return h;
}

Vector policy_reward(const RewardTable& reward, const SoftPolicy& policy) { return expected_under(reward, policy); }

Table state_kernel(const TabularMdp& mdp, const SoftPolicy& policy) {
  const std::size_t n = mdp.n_states();
  const std::size_t k = mdp.n_actions();
  Table kernel = Table::Zero(n, n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < k; ++a) {
      const double p = policy.prob(s, a);
      if (p > 0.0) kernel.row(s) += p * mdp.continuation().row(s * k + a);
    }
  return kernel;
}

PolicyEvaluation evaluate_policy(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy,
                                 double entropy_weight) {
  require_solvable(mdp);
  require_policy(mdp, policy);
  require(static_cast<std::size_t>(reward.rows()) == mdp.n_states() &&
              static_cast<std::size_t>(reward.cols()) == mdp.n_actions() && reward.allFinite(),
          "reward table must be finite with shape (states, actions)");

  const std::size_t n = mdp.n_states();
  const Table kernel = state_kernel(mdp, policy);
  const Vector r_pi = policy_reward(reward, policy);
  const Vector h = state_entropy(policy);

  PolicyEvaluation out;
  out.entropy_weight = entropy_weight;

  if (!mdp.finite_horizon()) {
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * Eigen::MatrixXd(kernel);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu_t(m.transpose());
    EvaluationLayer layer;
    layer.weight = lu_t.solve(mdp.initial());
    const Vector hard_v = lu.solve(r_pi);
    const Vector soft_v = lu.solve(r_pi + entropy_weight * h);
    layer.values = make_bundle(backup(mdp, reward, soft_v), soft_v, backup(mdp, reward, hard_v), hard_v);
    out.layers.push_back(std::move(layer));
  } else {
    const std::size_t horizon = *mdp.horizon();
    out.layers.resize(horizon);
    Vector w = mdp.initial();
    for (std::size_t t = 0; t < horizon; ++t) {
      out.layers[t].weight = w;
      w = mdp.gamma() * (kernel.transpose() * w);
    }
    Vector hard_next = Vector::Zero(n);
    Vector soft_next = Vector::Zero(n);
    for (std::size_t t = horizon; t-- > 0;) {
      Table hard_q = backup(mdp, reward, hard_next);
      Table soft_q = backup(mdp, reward, soft_next);
      Vector hard_v = expected_under(hard_q, policy);
      Vector soft_v = expected_under(soft_q, policy) + entropy_weight * h;
      hard_next = hard_v;
      soft_next = soft_v;
      out.layers[t].values = make_bundle(std::move(soft_q), std::move(soft_v), std::move(hard_q), std::move(hard_v));
    }
  }
  for (const auto& layer : out.layers) {
    out.utility += layer.weight.dot(r_pi);
    out.entropy += layer.weight.dot(h);
  }
  return out;
}

double policy_utility(const TabularMdp& mdp, const RewardTable& reward, const SoftPolicy& policy) {
  return evaluate_policy(mdp, reward, policy).utility;
}

double policy_entropy(const TabularMdp& mdp, const SoftPolicy& policy) {
  const RewardTable zero = RewardTable::Zero(mdp.n_states(), mdp.n_actions());
  return evaluate_policy(mdp, zero, policy).entropy;
}

Occupancy occupancy(const TabularMdp& mdp, const SoftPolicy& policy) {
  require_solvable(mdp);
  require_policy(mdp, policy);
  const std::size_t n = mdp.n_states();
  const Table kernel = state_kernel(mdp, policy);
  Occupancy occ;
  if (!mdp.finite_horizon()) {
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * Eigen::MatrixXd(kernel).transpose();
    occ.state = m.partialPivLu().solve(mdp.initial());
  } else {
    occ.state = Vector::Zero(n);
    Vector w = mdp.initial();
    for (std::size_t t = 0; t < *mdp.horizon(); ++t) {
      occ.state += w;
      w = mdp.gamma() * (kernel.transpose() * w);
    }
  }
  occ.state_action = policy.probs().array().colwise() * occ.state.array();
  return occ;
}

double soft_bellman_residual(const TabularMdp& mdp, const RewardTable& reward, const Vector& soft_v,
                             double entropy_weight) {
  const Table q = backup(mdp, reward, soft_v);
  return (soft_max_backup(mdp, q, entropy_weight) - soft_v).cwiseAbs().maxCoeff();
}

SoftSolution soft_value_iteration(const TabularMdp& mdp, const RewardTable& reward, const SolverOptions& opts) {
  require_solvable(mdp);
  require(opts.entropy_weight > 0.0, "soft solver needs a positive entropy weight");
  require(reward.allFinite(), "reward must be finite");
  const double alpha = opts.entropy_weight;
  SoftSolution out;

  if (mdp.finite_horizon()) {
    // Backward induction is exact; the returned policy is the time-zero rule.
    Vector v = Vector::Zero(mdp.n_states());
    Table q;
    for (std::size_t t = 0; t < *mdp.horizon(); ++t) {
      q = backup(mdp, reward, v);
      v = soft_max_backup(mdp, q, alpha);
      ++out.sweeps;
    }
    out.policy = softmax_policy(mdp, q, alpha);
    out.values = evaluate_policy(mdp, reward, out.policy, alpha).layers.front().values;
    out.residual = 0.0;
    out.start_value = mdp.initial().dot(v);
    return out;
  }

  // Soft policy iteration: exact evaluation of the current softmax policy,
  // then a softmax improvement. Converges in a handful of rounds.
  Vector v = Vector::Zero(mdp.n_states());
  double residual = std::numeric_limits<double>::infinity();
  for (out.sweeps = 0; out.sweeps < opts.max_sweeps; ++out.sweeps) {
    const Table q = backup(mdp, reward, v);
    const Vector next = soft_max_backup(mdp, q, alpha);
    residual = (next - v).cwiseAbs().maxCoeff();
    if (residual < opts.tolerance) break;
    const SoftPolicy improved = softmax_policy(mdp, q, alpha);
    const Vector evaluated = evaluate_policy(mdp, reward, improved, alpha).layers.front().values.soft_v;
    // Fall back to a plain sweep if evaluation ever fails to improve (it should not).
    v = (evaluated - next).minCoeff() >= -1e-9 ? evaluated : next;
  }
  if (residual >= opts.tolerance) throw ConvergenceError("soft value iteration did not converge", residual);
  out.policy = softmax_policy(mdp, backup(mdp, reward, v), alpha);
  out.values = evaluate_policy(mdp, reward, out.policy, alpha).layers.front().values;
  out.residual = soft_bellman_residual(mdp, reward, out.values.soft_v, alpha);
  out.start_value = mdp.initial().dot(out.values.soft_v);
  return out;
}

HardSolution hard_value_iteration(const TabularMdp& mdp, const RewardTable& reward, const SolverOptions& opts) {
  require_solvable(mdp);
  require(reward.allFinite(), "reward must be finite");
  HardSolution out;
  out.actions.assign(mdp.n_states(), 0);

  if (mdp.finite_horizon()) {
    Vector v = Vector::Zero(mdp.n_states());
    Table q;
    for (std::size_t t = 0; t < *mdp.horizon(); ++t) {
      q = backup(mdp, reward, v);
      v = hard_max_backup(mdp, q);
      ++out.sweeps;
    }
    for (std::size_t s = 0; s < mdp.n_states(); ++s) out.actions[s] = greedy_action(mdp, q, s);
    out.value = v;
    out.policy = SoftPolicy::deterministic(mdp, out.actions);
    out.start_value = mdp.initial().dot(v);
    return out;
  }

  // Howard policy iteration with exact evaluation; ties go to the lowest index.
  for (std::size_t s = 0; s < mdp.n_states(); ++s) out.actions[s] = greedy_action(mdp, reward, s);
  Vector v;
  double residual = std::numeric_limits<double>::infinity();
  const RewardTable zero_entropy_reward = reward;
  for (out.sweeps = 0; out.sweeps < opts.max_sweeps; ++out.sweeps) {
    const SoftPolicy pi = SoftPolicy::deterministic(mdp, out.actions);
    v = evaluate_policy(mdp, zero_entropy_reward, pi, 0.0).layers.front().values.hard_v;
    const Table q = backup(mdp, reward, v);
    residual = (hard_max_backup(mdp, q) - v).cwiseAbs().maxCoeff();
    bool changed = false;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
      const std::size_t g = greedy_action(mdp, q, s);
      if (q(s, g) > q(s, out.actions[s]) + 1e-12) {
        out.actions[s] = g;
        changed = true;
      }
    }
    if (!changed) break;
  }
  if (residual >= opts.tolerance) throw ConvergenceError("hard value iteration did not converge", residual);
  // Canonical tie-break: among near-optimal actions, lowest index wins.
  const Table q = backup(mdp, reward, v);
  for (std::size_t s = 0; s < mdp.n_states(); ++s) out.actions[s] = greedy_action(mdp, q, s);
  out.policy = SoftPolicy::deterministic(mdp, out.actions);
  out.value = v;
  out.residual = residual;
  out.start_value = mdp.initial().dot(v);
  return out;
}

std::vector<Trajectory> sample_trajectories(const TabularMdp& mdp, const SoftPolicy& policy, std::size_t n,
                                            std::size_t max_len, std::uint64_t seed) {
  require(n > 0, "need at least one trajectory");
  require_policy(mdp, policy);
  std::mt19937_64 rng(seed);
  const std::size_t len = mdp.finite_horizon() ? std::min(max_len, *mdp.horizon()) : max_len;
  const std::size_t k = mdp.n_actions();
  std::vector<Trajectory> out(n);
  for (auto& traj : out) {
    std::size_t s = sample_index(mdp.initial().data(), mdp.n_states(), unit_from_bits(rng()));
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t a = sample_index(policy.probs().row(s).data(), k, unit_from_bits(rng()));
      traj.steps.push_back({s, a});
      if (mdp.terminal(s)) break;
      s = sample_index(mdp.transition().row(s * k + a).data(), mdp.n_states(), unit_from_bits(rng()));
    }
  }
  return out;
}

double visit_probability(const TabularMdp& mdp, const SoftPolicy& policy, std::size_t target, std::size_t horizon) {
  require(horizon >= 1, "horizon must be at least 1");
  require(target < mdp.n_states(), "target state out of range");
  require_policy(mdp, policy);
  const Table kernel = state_kernel(mdp, policy);
  Vector w = mdp.initial();
  double hit = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    hit += w(target);
    w(target) = 0.0;  // absorbed: already counted
    w = kernel.transpose() * w;
  }
  return hit;
}

double trajectory_return(const TabularMdp& mdp, const RewardTable& reward, const Trajectory& traj) {
  double total = 0.0;
  double discount = 1.0;
  for (const Step& st : traj.steps) {
    double r = 0.0;
    if (st.action == kNoAction) {
      double acc = 0.0;
      for (std::size_t a = 0; a < mdp.n_actions(); ++a)
        if (mdp.available(st.state, a)) acc += reward(st.state, a);
      r = acc / static_cast<double>(mdp.n_available(st.state));
    } else {
      r = reward(st.state, st.action);
    }
    total += discount * r;
    discount *= mdp.gamma();
  }
  return total;
}

bool trajectory_valid(const TabularMdp& mdp, const Trajectory& traj) {
  if (traj.steps.empty()) return false;
  if (mdp.finite_horizon() && traj.steps.size() > *mdp.horizon()) return false;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const Step& st = traj.steps[t];
    if (st.state >= mdp.n_states()) return false;
    const bool last = t + 1 == traj.steps.size();
    if (st.action == kNoAction) {
      if (!last) return false;
    } else if (st.action >= mdp.n_actions() || !mdp.available(st.state, st.action)) {
      return false;
    }
    if (t == 0 && mdp.initial()(st.state) <= 0.0) return false;
    if (last) break;
    if (mdp.terminal(st.state)) return false;
    if (mdp.prob(st.state, st.action, traj.steps[t + 1].state) <= 0.0) return false;
  }
  return true;
}

}  // namespace pagar
