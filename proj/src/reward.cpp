#include "pagar/reward.hpp"

#include <algorithm>
#include <cmath>

#include "pagar/error.hpp"

namespace pagar {

RewardFamily::RewardFamily(std::vector<Table> features, std::vector<Interval> box, Table base)
    : features_(std::move(features)), box_(std::move(box)), base_(std::move(base)) {
  require(!features_.empty() || base_.size() > 0, "reward family needs a feature or a base table");
  require(features_.size() == box_.size(), "one interval per feature required");
  if (base_.size() == 0) base_ = Table::Zero(features_.front().rows(), features_.front().cols());
  for (const auto& f : features_) {
    require(f.rows() == base_.rows() && f.cols() == base_.cols(), "feature tables must share one shape");
    require(f.allFinite(), "features must be finite");
  }
  require(base_.allFinite(), "base reward must be finite");
  for (const auto& iv : box_) require(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo <= iv.hi, "bad interval");
}

bool RewardFamily::contains(const Vector& params, double tol) const {
  if (static_cast<std::size_t>(params.size()) != param_dim()) return false;
  for (std::size_t i = 0; i < param_dim(); ++i)
    if (!(params(i) >= box_[i].lo - tol && params(i) <= box_[i].hi + tol)) return false;
  return true;
}

Vector RewardFamily::project(const Vector& params) const {
  require(static_cast<std::size_t>(params.size()) == param_dim(), "parameter vector has wrong size");
  Vector out = params;
  for (std::size_t i = 0; i < param_dim(); ++i) out(i) = std::clamp(out(i), box_[i].lo, box_[i].hi);
  return out;
}

Vector RewardFamily::center() const {
  Vector c(param_dim());
  for (std::size_t i = 0; i < param_dim(); ++i) c(i) = 0.5 * (box_[i].lo + box_[i].hi);
  return c;
}

std::vector<Vector> RewardFamily::grid(std::size_t resolution) const {
  require(resolution >= 1, "grid resolution must be positive");
  const std::size_t d = param_dim();
  std::vector<Vector> out;
  std::vector<std::size_t> idx(d, 0);
  auto value = [&](std::size_t dim, std::size_t k) {
    if (resolution == 1) return 0.5 * (box_[dim].lo + box_[dim].hi);
    return box_[dim].lo + (box_[dim].hi - box_[dim].lo) * static_cast<double>(k) / static_cast<double>(resolution - 1);
  };
  while (true) {
    Vector p(d);
    for (std::size_t i = 0; i < d; ++i) p(i) = value(i, idx[i]);
    out.push_back(std::move(p));
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (++idx[i] < resolution) break;
      idx[i] = 0;
      if (i == 0) return out;
    }
    if (d == 0) return out;
  }
}

RewardTable RewardFamily::table(const Vector& params) const {
  require(static_cast<std::size_t>(params.size()) == param_dim(), "parameter vector has wrong size");
  RewardTable r = base_;
  for (std::size_t i = 0; i < param_dim(); ++i) r += params(i) * features_[i];
  return r;
}

RewardPoint materialize(const RewardFamily& family, const Vector& params) {
  require(family.contains(params), "reward parameters outside the box");
  return {params, family.table(params)};
}

DeltaRewardSet::DeltaRewardSet(RewardFamily family, double delta, Objective objective, double tolerance)
    : family_(std::move(family)), delta_(delta), objective_(std::move(objective)), tolerance_(tolerance) {
  require(static_cast<bool>(objective_), "delta set needs an objective");
}

Membership DeltaRewardSet::membership(const Vector& params) const {
  require(family_.contains(params), "reward parameters outside the box");
  const double margin = objective_(params) - delta_;
  return {margin >= -tolerance_, margin};
}

const std::vector<Vector>& DeltaRewardSet::grid_members(std::size_t resolution) {
  if (family_.param_dim() > kMaxGridDim) throw GuardViolation("grid enumeration limited to 3 reward parameters");
  auto it = cache_.find(resolution);
  if (it != cache_.end()) return it->second;
  std::vector<Vector> members;
  for (auto& p : family_.grid(resolution))
    if (membership(p).member) members.push_back(std::move(p));
  // grid() already yields lexicographic order.
  return cache_.emplace(resolution, std::move(members)).first->second;
}

}  // namespace pagar
