#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pu/datagen.hpp"
#include "pu/experiments.hpp"
#include "pu/metrics.hpp"
#include "pu/solver.hpp"

using pu::Index;
using pu::SyntheticSpec;
using pu::Vector;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

bool same_bundle(const pu::SyntheticBundle& a, const pu::SyntheticBundle& b) {
  return a.train.positives == b.train.positives && a.train.unlabeled == b.train.unlabeled &&
         a.test.features == b.test.features && a.test.labels == b.test.labels && a.true_support == b.true_support &&
         a.outlier_indices == b.outlier_indices && a.unlabeled_truth == b.unlabeled_truth;
}

}  // namespace

TEST(Generate, DefaultShapes) {
  SyntheticSpec spec;
  const auto b = pu::generate(spec);
  EXPECT_EQ(b.train.positives.rows(), 100);
  EXPECT_EQ(b.train.unlabeled.rows(), 300);
  EXPECT_EQ(b.test.features.rows(), 4000);
  EXPECT_EQ(b.train.dim(), spec.p);
  EXPECT_EQ(b.test.dim(), spec.p);
  EXPECT_EQ(std::count(b.test.labels.begin(), b.test.labels.end(), 1), 1200);
  EXPECT_EQ(std::count(b.unlabeled_truth.begin(), b.unlabeled_truth.end(), 1), 20);
  EXPECT_EQ(b.true_support.size(), 40u);
  EXPECT_EQ(b.true_support.front(), 0u);
  EXPECT_EQ(b.true_support.back(), 39u);
  EXPECT_EQ(b.outlier_indices, (std::vector<Index>{93, 94, 95, 96, 97, 98, 99}));
}

TEST(Generate, RejectsInvalidSpecs) {
  SyntheticSpec s;
  s.s_true = s.p + 1;
  EXPECT_THROW(pu::generate(s), std::invalid_argument);
  s = {};
  s.n_outliers = 101;
  EXPECT_THROW(pu::generate(s), std::invalid_argument);
  s = {};
  s.sd_rel = 0.0;
  EXPECT_THROW(pu::generate(s), std::invalid_argument);
  s = {};
  s.n_unlabeled_pos = 301;
  EXPECT_THROW(pu::generate(s), std::invalid_argument);
}

TEST(Generate, Deterministic) {
  SyntheticSpec spec;
  spec.seed = 77;
  EXPECT_TRUE(same_bundle(pu::generate(spec), pu::generate(spec)));
  spec.permute_columns = true;
  EXPECT_TRUE(same_bundle(pu::generate(spec), pu::generate(spec)));
  const auto a = pu::generate(spec);
  spec.seed = 78;
  EXPECT_FALSE(same_bundle(a, pu::generate(spec)));
}

TEST(Generate, MeanDifferenceDirectionMatchesClosedFormAuc) {
  SyntheticSpec spec;
  spec.p = 40;
  spec.s_true = 40;
  spec.n_outliers = 0;
  spec.n_test_pos = 20000;
  spec.n_test_neg = 20000;
  spec.seed = 3;
  const auto b = pu::generate(spec);
  pu::Model m;
  m.w = Vector::Ones(40);
  m.hypothesis = pu::SparsityHypothesis::full(40);
  const double mc = pu::empirical_auc(pu::score(m, b.test.features), b.test.labels);
  // w = 1: score difference ~ N(2 p mean_rel, 2 p sd_rel^2).
  const double closed = normal_cdf(std::sqrt(40.0) * 2.0 / (std::sqrt(2.0) * 7.0));
  EXPECT_NEAR(closed, 0.8993, 5e-4);
  EXPECT_NEAR(mc, closed, 0.01);
}

TEST(Generate, OutlierRowsCentreOnOutlierMean) {
  for (bool all : {false, true}) {
    SyntheticSpec spec;
    spec.outliers_all_columns = all;
    spec.seed = 4;
    const auto b = pu::generate(spec);
    const Index cols = all ? spec.p : spec.s_true;
    for (Index r : b.outlier_indices) {
      const double mean = b.train.positives.row(static_cast<Eigen::Index>(r)).head(static_cast<Eigen::Index>(cols)).mean();
      EXPECT_LT(std::abs(mean - spec.outlier_mean), 3.0 * spec.outlier_sd / std::sqrt(static_cast<double>(cols)));
    }
    if (!all) {
      const auto tail = b.train.positives.bottomRows(7).rightCols(static_cast<Eigen::Index>(spec.p - spec.s_true));
      EXPECT_LT(std::abs(tail.mean()), 5.0 * spec.sd_irrel / std::sqrt(static_cast<double>(tail.size())));
    }
  }
}

TEST(Generate, RelevantPositiveColumnMoments) {
  SyntheticSpec spec;
  spec.p = 10;
  spec.s_true = 5;
  spec.n_pos_labeled = 4000;
  spec.n_outliers = 0;
  spec.n_test_pos = spec.n_test_neg = 0;
  spec.seed = 5;
  const auto b = pu::generate(spec);
  const double n = 4000.0;
  for (Eigen::Index j = 0; j < 5; ++j) {
    const auto col = b.train.positives.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / (n - 1));
    EXPECT_LT(std::abs(mean - spec.mean_rel), 5 * spec.sd_rel / std::sqrt(n));
    EXPECT_LT(std::abs(sd - spec.sd_rel), 5 * spec.sd_rel / std::sqrt(2 * n));
  }
}

TEST(Generate, PermutedColumnsCarryTheSignal) {
  SyntheticSpec spec;
  spec.p = 30;
  spec.s_true = 5;
  spec.permute_columns = true;
  spec.n_outliers = 0;
  spec.n_pos_labeled = 3000;
  spec.mean_rel = 3.0;
  spec.seed = 6;
  const auto b = pu::generate(spec);
  ASSERT_EQ(b.true_support.size(), 5u);
  EXPECT_TRUE(std::is_sorted(b.true_support.begin(), b.true_support.end()));
  for (Index j = 0; j < 30; ++j) {
    const bool rel = std::binary_search(b.true_support.begin(), b.true_support.end(), j);
    const double mean = b.train.positives.col(static_cast<Eigen::Index>(j)).mean();
    EXPECT_EQ(mean > 1.5, rel) << "column " << j;
  }
}

TEST(Generate, ShufflingIrrelevantColumnsBarelyMovesTestAuc) {
  double base = 0.0, shuffled = 0.0;
  const int seeds = 10;
  for (int r = 0; r < seeds; ++r) {
    SyntheticSpec spec;
    spec.p = 80;
    spec.n_test_pos = 600;
    spec.n_test_neg = 1400;
    spec.seed = pu::derive_seed(600, r);
    auto b = pu::generate(spec);
    pu::TrainConfig c = pu::experiment_base_config();
    c.epochs = 40;
    c.t = 7;
    c.hypothesis = pu::SparsityHypothesis::plain_l0(spec.p, 40);
    c.seed = r;
    auto run = [&](const pu::SyntheticBundle& bb) {
      const auto m = pu::psg_fit(bb.train, c).model;
      return pu::empirical_auc(pu::score(m, bb.test.features), bb.test.labels);
    };
    base += run(b);
    std::vector<Index> perm(spec.p);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::vector<Index> irr(perm.begin() + 40, perm.end());
    pu::Rng rng(pu::derive_seed(601, r));
    rng.shuffle(irr);
    std::copy(irr.begin(), irr.end(), perm.begin() + 40);
    Eigen::PermutationMatrix<Eigen::Dynamic> P(static_cast<Eigen::Index>(spec.p));
    for (Index j = 0; j < spec.p; ++j) P.indices()[static_cast<Eigen::Index>(j)] = static_cast<int>(perm[j]);
    b.train.positives = b.train.positives * P;
    b.train.unlabeled = b.train.unlabeled * P;
    b.test.features = b.test.features * P;
    shuffled += run(b);
  }
  EXPECT_LT(std::abs(base - shuffled) / seeds, 0.02);
}

TEST(Figure1Series, ProtocolShape) {
  std::vector<Index> grid;
  for (Index n = 10; n <= 200; n += 10) grid.push_back(n);
  const auto series = pu::figure1_series(50, grid, 0.10, 10, 42, 20, 50);
  ASSERT_EQ(series.size(), 200u);
  for (const auto& pt : series) {
    EXPECT_EQ(pt.bundle.train.n_pos(), 50u);
    EXPECT_EQ(pt.bundle.train.n_unl(), pt.n);
    EXPECT_EQ(pt.bundle.train.dim(), 20u);
    EXPECT_EQ(pt.bundle.true_support.size(), 20u);
    EXPECT_TRUE(pt.bundle.outlier_indices.empty());
    const auto pos = std::count(pt.bundle.unlabeled_truth.begin(), pt.bundle.unlabeled_truth.end(), 1);
    EXPECT_EQ(pos, std::llround(0.1 * static_cast<double>(pt.n)));
  }
  for (Index g = 0; g < grid.size(); ++g) {
    for (Index r = 0; r < 10; ++r) EXPECT_EQ(series[g * 10 + r].repeat, r);
  }
}

TEST(Figure1Series, SingleBundleAndDeterminism) {
  const auto a = pu::figure1_series(50, {10}, 0.1, 1, 9, 20, 20);
  ASSERT_EQ(a.size(), 1u);
  const auto b = pu::figure1_series(50, {10, 20}, 0.1, 2, 9, 20, 20);
  EXPECT_TRUE(same_bundle(a[0].bundle, b[0].bundle));
  EXPECT_FALSE(same_bundle(b[0].bundle, b[1].bundle));
}

TEST(Figure1Series, RejectsBadGrids) {
  EXPECT_THROW(pu::figure1_series(50, {}, 0.1, 1, 0), std::invalid_argument);
  EXPECT_THROW(pu::figure1_series(50, {20, 10}, 0.1, 1, 0), std::invalid_argument);
  EXPECT_THROW(pu::figure1_series(50, {10}, 0.1, 0, 0), std::invalid_argument);
}

TEST(Rng, KnownStreamAndHelpers) {
  // SplitMix64 reference output for seed 0.
  pu::Rng r(0);
  EXPECT_EQ(r(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(r(), 0x6e789e6aa1b965f4ULL);
  pu::Rng u(5);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    EXPECT_LT(u.below(7), 7u);
  }
  EXPECT_NE(pu::derive_seed(1, 2, 3), pu::derive_seed(1, 3, 2));
}
