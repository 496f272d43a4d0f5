#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pu/types.hpp"

namespace pu {

/// Disjoint groups of 0-based feature indices that together cover {0, ..., dim-1}.
class GroupPartition {
 public:
  GroupPartition() = default;

  /// Throws std::invalid_argument unless `groups` partitions {0, ..., dim-1}.
  GroupPartition(std::vector<std::vector<Index>> groups, Index dim) : groups_(std::move(groups)), dim_(dim) {
    std::vector<int> seen(dim, 0);
    for (Index g = 0; g < groups_.size(); ++g) {
      detail::require(!groups_[g].empty(), "group " + std::to_string(g + 1) + " is empty");
      for (Index j : groups_[g]) {
        detail::require(j < dim, "group " + std::to_string(g + 1) + " references feature " +
                                     std::to_string(j + 1) + " beyond dimension " + std::to_string(dim));
        detail::require(seen[j] == 0, "feature " + std::to_string(j + 1) + " appears in more than one group");
        seen[j] = 1;
      }
      std::sort(groups_[g].begin(), groups_[g].end());
    }
    for (Index j = 0; j < dim; ++j) {
      detail::require(seen[j] == 1, "feature " + std::to_string(j + 1) + " is not covered by any group");
    }
  }

  static GroupPartition singletons(Index dim) {
    std::vector<std::vector<Index>> g(dim);
    for (Index j = 0; j < dim; ++j) g[j] = {j};
    return GroupPartition(std::move(g), dim);
  }

  static GroupPartition whole(Index dim) {
    std::vector<Index> all(dim);
    std::iota(all.begin(), all.end(), Index{0});
    return GroupPartition({std::move(all)}, dim);
  }

  Index dim() const { return dim_; }
  Index size() const { return groups_.size(); }
  const std::vector<Index>& operator[](Index g) const { return groups_[g]; }
  const std::vector<std::vector<Index>>& groups() const { return groups_; }

 private:
  std::vector<std::vector<Index>> groups_;
  Index dim_ = 0;
};

/// At most `s` nonzero coordinates.
struct PlainL0 {
  Index dim = 0;
  Index s = 0;
};

/// At most `s` groups with any nonzero coordinate.
struct GroupL0 {
  GroupPartition groups;
  Index s = 0;
};

/// Within group g, at most `s_vec[g]` nonzero coordinates.
struct Exclusive {
  GroupPartition groups;
  std::vector<Index> s_vec;
};

/// Constraint set for the weight vector.
class SparsityHypothesis {
 public:
  using Variant = std::variant<PlainL0, GroupL0, Exclusive>;

  SparsityHypothesis() = default;

  static SparsityHypothesis plain_l0(Index dim, Index s) {
    detail::require(s <= dim, "PlainL0: s=" + std::to_string(s) + " exceeds dimension " + std::to_string(dim));
    return SparsityHypothesis(PlainL0{dim, s});
  }
  static SparsityHypothesis full(Index dim) { return plain_l0(dim, dim); }
  static SparsityHypothesis group_l0(GroupPartition groups, Index s) {
    detail::require(s <= groups.size(), "GroupL0: s=" + std::to_string(s) + " exceeds group count " +
                                            std::to_string(groups.size()));
    return SparsityHypothesis(GroupL0{std::move(groups), s});
  }
  static SparsityHypothesis exclusive(GroupPartition groups, std::vector<Index> s_vec) {
    detail::require(s_vec.size() == groups.size(), "Exclusive: need one budget per group");
    for (Index g = 0; g < groups.size(); ++g) {
      detail::require(s_vec[g] <= groups[g].size(), "Exclusive: budget " + std::to_string(s_vec[g]) +
                                                        " exceeds size of group " + std::to_string(g + 1));
    }
    return SparsityHypothesis(Exclusive{std::move(groups), std::move(s_vec)});
  }

  const Variant& variant() const { return v_; }

  Index dim() const {
    return std::visit(
        [](const auto& h) -> Index {
          if constexpr (std::is_same_v<std::decay_t<decltype(h)>, PlainL0>) {
            return h.dim;
          } else {
            return h.groups.dim();
          }
        },
        v_);
  }

  /// True when the set is all of R^p, so projection is the identity.
  bool is_full() const {
    if (const auto* h = std::get_if<PlainL0>(&v_)) return h->s == h->dim;
    if (const auto* h = std::get_if<GroupL0>(&v_)) return h->s == h->groups.size();
    const auto& h = std::get<Exclusive>(v_);
    for (Index g = 0; g < h.groups.size(); ++g) {
      if (h.s_vec[g] < h.groups[g].size()) return false;
    }
    return true;
  }

  std::string describe() const {
    if (const auto* h = std::get_if<PlainL0>(&v_)) return "l0:" + std::to_string(h->s);
    if (const auto* h = std::get_if<GroupL0>(&v_)) {
      return "group:" + std::to_string(h->groups.size()) + "groups:" + std::to_string(h->s);
    }
    return "excl:" + std::to_string(std::get<Exclusive>(v_).groups.size()) + "groups";
  }

 private:
  explicit SparsityHypothesis(Variant v) : v_(std::move(v)) {}
  Variant v_{PlainL0{}};
};

struct ProjectionReport {
  Vector projected;
  /// Retained coordinates (l0, exclusive) or retained groups (group l0), ascending.
  std::vector<Index> support;
  double residual_norm = 0.0;
};

namespace detail {

/// Indices of the `s` largest keys; ties go to the lower index. Result is ascending.
inline std::vector<Index> top_k(std::span<const double> keys, std::span<const Index> ids, Index s) {
  std::vector<Index> order(keys.size());
  std::iota(order.begin(), order.end(), Index{0});
  auto better = [&](Index a, Index b) {
    if (keys[a] != keys[b]) return keys[a] > keys[b];
    return ids[a] < ids[b];
  };
  if (s < order.size()) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s), order.end(), better);
    order.resize(s);
  }
  std::vector<Index> out(order.size());
  std::transform(order.begin(), order.end(), out.begin(), [&](Index k) { return ids[k]; });
  std::sort(out.begin(), out.end());
  return out;
}

inline ProjectionReport finish(const Vector& v, Vector projected, std::vector<Index> support) {
  const double r = (v - projected).norm();
  return {std::move(projected), std::move(support), r};
}

}  // namespace detail

/// Hard thresholding: keep the `s` largest-magnitude entries.
inline ProjectionReport project_l0(const Vector& v, Index s) {
  const Index n = static_cast<Index>(v.size());
  detail::require(s <= n, "project_l0: s=" + std::to_string(s) + " exceeds dimension " + std::to_string(n));
  std::vector<double> mag(n);
  std::vector<Index> ids(n);
  for (Index i = 0; i < n; ++i) {
    mag[i] = std::abs(v[static_cast<Eigen::Index>(i)]);
    ids[i] = i;
  }
  auto support = detail::top_k(mag, ids, s);
  Vector out = Vector::Zero(v.size());
  for (Index i : support) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(i)];
  return detail::finish(v, std::move(out), std::move(support));
}

/// Keep the `s` groups of largest Euclidean norm intact; zero the rest.
inline ProjectionReport project_group_l0(const Vector& v, const GroupPartition& groups, Index s) {
  detail::require(groups.dim() == static_cast<Index>(v.size()),
                  "project_group_l0: partition dimension " + std::to_string(groups.dim()) +
                      " does not match vector dimension " + std::to_string(v.size()));
  detail::require(s <= groups.size(), "project_group_l0: s exceeds group count");
  std::vector<double> norms(groups.size());
  std::vector<Index> first(groups.size());
  for (Index g = 0; g < groups.size(); ++g) {
    double sq = 0.0;
    for (Index j : groups[g]) sq += v[static_cast<Eigen::Index>(j)] * v[static_cast<Eigen::Index>(j)];
    norms[g] = std::sqrt(sq);
    first[g] = groups[g].front();
  }
  // top_k breaks ties on the smallest member index and returns those indices.
  auto kept_first = detail::top_k(norms, first, s);
  std::vector<Index> kept;
  kept.reserve(kept_first.size());
  for (Index g = 0; g < groups.size(); ++g) {
    if (std::binary_search(kept_first.begin(), kept_first.end(), first[g])) kept.push_back(g);
  }
  Vector out = Vector::Zero(v.size());
  for (Index g : kept) {
    for (Index j : groups[g]) out[static_cast<Eigen::Index>(j)] = v[static_cast<Eigen::Index>(j)];
  }
  return detail::finish(v, std::move(out), std::move(kept));
}

/// Per-group hard thresholding with budget s_vec[g] inside group g.
inline ProjectionReport project_exclusive(const Vector& v, const GroupPartition& groups,
                                          std::span<const Index> s_vec) {
  detail::require(groups.dim() == static_cast<Index>(v.size()),
                  "project_exclusive: partition dimension does not match vector dimension");
  detail::require(s_vec.size() == groups.size(), "project_exclusive: need one budget per group");
  Vector out = Vector::Zero(v.size());
  std::vector<Index> support;
  for (Index g = 0; g < groups.size(); ++g) {
    const auto& members = groups[g];
    detail::require(s_vec[g] <= members.size(), "project_exclusive: budget " + std::to_string(s_vec[g]) +
                                                    " exceeds size of group " + std::to_string(g + 1));
    std::vector<double> mag(members.size());
    for (Index k = 0; k < members.size(); ++k) mag[k] = std::abs(v[static_cast<Eigen::Index>(members[k])]);
    for (Index j : detail::top_k(mag, members, s_vec[g])) {
      out[static_cast<Eigen::Index>(j)] = v[static_cast<Eigen::Index>(j)];
      support.push_back(j);
    }
  }
  std::sort(support.begin(), support.end());
  return detail::finish(v, std::move(out), std::move(support));
}

inline ProjectionReport project(const Vector& v, const SparsityHypothesis& h) {
  detail::require(static_cast<Index>(v.size()) == h.dim(), "project: vector dimension " +
                                                                std::to_string(v.size()) + " but hypothesis expects " +
                                                                std::to_string(h.dim()));
  return std::visit(
      [&](const auto& c) -> ProjectionReport {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PlainL0>) {
          return project_l0(v, c.s);
        } else if constexpr (std::is_same_v<T, GroupL0>) {
          return project_group_l0(v, c.groups, c.s);
        } else {
          return project_exclusive(v, c.groups, c.s_vec);
        }
      },
      h.variant());
}

/// Membership test with exact zero comparison.
inline bool hypothesis_contains(const Vector& v, const SparsityHypothesis& h) {
  detail::require(static_cast<Index>(v.size()) == h.dim(), "hypothesis_contains: dimension mismatch");
  auto nnz_in = [&](const std::vector<Index>& members) {
    Index c = 0;
    for (Index j : members) c += v[static_cast<Eigen::Index>(j)] != 0.0 ? 1 : 0;
    return c;
  };
  return std::visit(
      [&](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PlainL0>) {
          return static_cast<Index>((v.array() != 0.0).count()) <= c.s;
        } else if constexpr (std::is_same_v<T, GroupL0>) {
          Index active = 0;
          for (Index g = 0; g < c.groups.size(); ++g) active += nnz_in(c.groups[g]) > 0 ? 1 : 0;
          return active <= c.s;
        } else {
          for (Index g = 0; g < c.groups.size(); ++g) {
            if (nnz_in(c.groups[g]) > c.s_vec[g]) return false;
          }
          return true;
        }
      },
      h.variant());
}

}  // namespace pu
