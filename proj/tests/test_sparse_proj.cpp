#include <gtest/gtest.h>

#include <limits>
#include <vector>

#include "pu/rng.hpp"
#include "pu/sparse_proj.hpp"

using pu::GroupPartition;
using pu::Index;
using pu::SparsityHypothesis;
using pu::Vector;

namespace {

Vector random_vector(pu::Rng& rng, Index n, bool with_ties) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) {
    v[static_cast<Eigen::Index>(i)] =
        with_ties ? static_cast<double>(rng.below(5)) - 2.0 : rng.normal();
  }
  return v;
}

GroupPartition random_partition(pu::Rng& rng, Index dim, Index max_groups) {
  std::vector<Index> perm(dim);
  std::iota(perm.begin(), perm.end(), Index{0});
  rng.shuffle(perm);
  const Index k = 1 + rng.below(std::min(dim, max_groups));
  std::vector<std::vector<Index>> groups(k);
  for (Index i = 0; i < dim; ++i) groups[i < k ? i : rng.below(k)].push_back(perm[i]);
  return GroupPartition(groups, dim);
}

// Squared distance from v to the best point supported on `mask` (keep v there, zero elsewhere).
double dist2_keep(const Vector& v, const std::vector<char>& mask) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!mask[static_cast<Index>(i)]) d += v[i] * v[i];
  }
  return d;
}

// Minimum over every feasible support of the distance to the set.
double brute_min(const Vector& v, const SparsityHypothesis& h) {
  const Index n = static_cast<Index>(v.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<char> keep(n);
    Vector z = Vector::Zero(v.size());
    for (Index i = 0; i < n; ++i) {
      keep[i] = (mask >> i) & 1u;
      if (keep[i]) z[static_cast<Eigen::Index>(i)] = 1.0;
    }
    if (!pu::hypothesis_contains(z, h)) continue;
    best = std::min(best, dist2_keep(v, keep));
  }
  return best;
}

}  // namespace

TEST(ProjectL0, Examples) {
  EXPECT_EQ(pu::project_l0(Vector{{3, -1, 2}}, 2).projected, (Vector{{3, 0, 2}}));
  const Vector v{{5, -4, 0.5}};
  EXPECT_EQ(pu::project_l0(v, 3).projected, v);
  EXPECT_EQ(pu::project_l0(Vector{{1, -1, 1}}, 2).projected, (Vector{{1, -1, 0}}));
  EXPECT_THROW(pu::project_l0(v, 4), std::invalid_argument);
}

TEST(ProjectL0, ReportFields) {
  const auto r = pu::project_l0(Vector{{3, -1, 2, -4}}, 2);
  EXPECT_EQ(r.support, (std::vector<Index>{0, 3}));
  EXPECT_DOUBLE_EQ(r.residual_norm, std::sqrt(5.0));
}

TEST(ProjectGroupL0, Examples) {
  GroupPartition g({{0, 1}, {2, 3}}, 4);
  EXPECT_EQ(pu::project_group_l0(Vector{{1, 1, 3, 0}}, g, 1).projected, (Vector{{0, 0, 3, 0}}));
  const Vector v{{1, 2, 3, 4}};
  EXPECT_EQ(pu::project_group_l0(v, g, 2).projected, v);
}

TEST(ProjectGroupL0, TieGoesToSmallestMember) {
  GroupPartition g({{3, 1}, {0, 2}}, 4);
  const auto r = pu::project_group_l0(Vector{{1, 1, 1, 1}}, g, 1);
  EXPECT_EQ(r.projected, (Vector{{1, 0, 1, 0}}));
  EXPECT_EQ(r.support, (std::vector<Index>{1}));
}

TEST(GroupPartition, RejectsNonPartitions) {
  EXPECT_THROW(GroupPartition({{0, 1}, {1, 2}}, 3), std::invalid_argument);
  EXPECT_THROW(GroupPartition({{0}, {2}}, 3), std::invalid_argument);
  EXPECT_THROW(GroupPartition({{0, 3}}, 3), std::invalid_argument);
  EXPECT_THROW(GroupPartition({{0, 1, 2}, {}}, 3), std::invalid_argument);
}

TEST(ProjectExclusive, Examples) {
  GroupPartition g({{0, 1, 2}, {3, 4}}, 5);
  const std::vector<Index> s{2, 1};
  EXPECT_EQ(pu::project_exclusive(Vector{{3, 1, 2, 5, 4}}, g, s).projected, (Vector{{3, 0, 2, 5, 0}}));
  const std::vector<Index> full{3, 2};
  const Vector v{{3, 1, 2, 5, 4}};
  EXPECT_EQ(pu::project_exclusive(v, g, full).projected, v);
  const std::vector<Index> over{4, 1};
  EXPECT_THROW(pu::project_exclusive(v, g, over), std::invalid_argument);
}

TEST(ProjectExclusive, SingletonsKeepOrDrop) {
  pu::Rng rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 1 + rng.below(10);
    const Vector v = random_vector(rng, n, false);
    std::vector<Index> s(n);
    for (auto& x : s) x = rng.below(2);
    const Vector got = pu::project_exclusive(v, GroupPartition::singletons(n), s).projected;
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      EXPECT_EQ(got[k], s[i] ? v[k] : 0.0);
    }
  }
}

TEST(Hypothesis, Membership) {
  EXPECT_TRUE(pu::hypothesis_contains(Vector{{1, 0, 0}}, SparsityHypothesis::plain_l0(3, 1)));
  EXPECT_FALSE(pu::hypothesis_contains(Vector{{1, 0, 1}}, SparsityHypothesis::plain_l0(3, 1)));
  EXPECT_TRUE(pu::hypothesis_contains(Vector{{1, 1, 0, 0}},
                                      SparsityHypothesis::group_l0(GroupPartition({{0, 1}, {2, 3}}, 4), 1)));
  EXPECT_FALSE(pu::hypothesis_contains(Vector{{1, 0, 1e-300}}, SparsityHypothesis::plain_l0(3, 1)));
}

TEST(Hypothesis, ConstructionValidates) {
  EXPECT_THROW(SparsityHypothesis::plain_l0(3, 4), std::invalid_argument);
  EXPECT_THROW(SparsityHypothesis::group_l0(GroupPartition::singletons(3), 4), std::invalid_argument);
  EXPECT_THROW(SparsityHypothesis::exclusive(GroupPartition::whole(3), {4}), std::invalid_argument);
}

TEST(Projection, OptimalAgainstBruteForce) {
  pu::Rng rng(22);
  for (int rep = 0; rep < 300; ++rep) {
    const Index n = 1 + rng.below(12);
    const Vector v = random_vector(rng, n, rep % 3 == 0);
    const auto parts = random_partition(rng, n, 4);
    std::vector<Index> s_vec(parts.size());
    for (Index g = 0; g < parts.size(); ++g) s_vec[g] = rng.below(parts[g].size() + 1);
    for (const auto& h : {SparsityHypothesis::plain_l0(n, rng.below(n + 1)),
                          SparsityHypothesis::group_l0(parts, rng.below(parts.size() + 1)),
                          SparsityHypothesis::exclusive(parts, s_vec)}) {
      const auto r = pu::project(v, h);
      const double got = (r.projected - v).squaredNorm();
      EXPECT_NEAR(got, brute_min(v, h), 1e-12) << h.describe();
      EXPECT_TRUE(pu::hypothesis_contains(r.projected, h));
      EXPECT_EQ(pu::project(r.projected, h).projected, r.projected);
      EXPECT_NEAR(r.residual_norm, std::sqrt(got), 1e-12);
    }
  }
}

TEST(Projection, AgreesWithInputOnSupport) {
  pu::Rng rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 1 + rng.below(20);
    const Vector v = random_vector(rng, n, true);
    const auto r = pu::project_l0(v, rng.below(n + 1));
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const bool on = std::binary_search(r.support.begin(), r.support.end(), i);
      EXPECT_EQ(r.projected[k], on ? v[k] : 0.0);
    }
  }
}

TEST(Projection, SpecialCasesReduceToL0) {
  pu::Rng rng(24);
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = 1 + rng.below(15);
    const Vector v = random_vector(rng, n, true);
    const Index s = rng.below(n + 1);
    const Vector l0 = pu::project_l0(v, s).projected;
    const std::vector<Index> one{s};
    EXPECT_EQ(pu::project_exclusive(v, GroupPartition::whole(n), one).projected, l0);
    EXPECT_EQ(pu::project_group_l0(v, GroupPartition::singletons(n), s).projected, l0);
  }
}

TEST(Projection, FullHypothesisIsIdentity) {
  const Vector v{{0.1, -3, 2}};
  const auto h = SparsityHypothesis::full(3);
  EXPECT_TRUE(h.is_full());
  EXPECT_EQ(pu::project(v, h).projected, v);
}
