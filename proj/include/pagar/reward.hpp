#pragma once

// Parametric reward families r(s,a) = base(s,a) + sum_i params_i * feature_i(s,a)
// over a box-constrained parameter domain, and superlevel sets of an IRL
// objective over such a family.

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pagar/mdp.hpp"

namespace pagar {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

class RewardFamily {
 public:
  RewardFamily(std::vector<Table> features, std::vector<Interval> box, Table base = Table());

  std::size_t param_dim() const noexcept { return features_.size(); }
  const std::vector<Table>& features() const noexcept { return features_; }
  const std::vector<Interval>& box() const noexcept { return box_; }
  const Table& base() const noexcept { return base_; }
  std::size_t n_states() const noexcept { return static_cast<std::size_t>(base_.rows()); }
  std::size_t n_actions() const noexcept { return static_cast<std::size_t>(base_.cols()); }

  bool contains(const Vector& params, double tol = 1e-12) const;
  Vector project(const Vector& params) const;
  Vector center() const;
  // Every grid point with `resolution` evenly spaced values per dimension.
  std::vector<Vector> grid(std::size_t resolution) const;
  // Table without the box check; used by finite-difference probes.
  RewardTable table(const Vector& params) const;

 private:
  std::vector<Table> features_;
  std::vector<Interval> box_;
  Table base_;
};

struct RewardPoint {
  Vector params;
  RewardTable table;
};

// Throws InvalidArgument for out-of-box parameters.
RewardPoint materialize(const RewardFamily& family, const Vector& params);

struct Membership {
  bool member = false;
  double margin = 0.0;  // objective - delta
};

// R_delta = { params : objective(params) >= delta } with an implicit
// membership oracle and an explicit, cached grid enumeration.
class DeltaRewardSet {
 public:
  using Objective = std::function<double(const Vector&)>;

  DeltaRewardSet(RewardFamily family, double delta, Objective objective, double tolerance = 1e-6);

  const RewardFamily& family() const noexcept { return family_; }
  double delta() const noexcept { return delta_; }
  double tolerance() const noexcept { return tolerance_; }
  double objective(const Vector& params) const { return objective_(params); }

  Membership membership(const Vector& params) const;
  // Grid points passing membership, sorted lexicographically. param_dim <= 3.
  const std::vector<Vector>& grid_members(std::size_t resolution);

 private:
  RewardFamily family_;
  double delta_;
  Objective objective_;
  double tolerance_;
  std::map<std::size_t, std::vector<Vector>> cache_;
};

inline constexpr std::size_t kMaxGridDim = 3;

}  // namespace pagar
