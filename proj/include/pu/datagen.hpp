#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pu/rng.hpp"
#include "pu/types.hpp"

namespace pu {

/// Two-Gaussian PU benchmark. Relevant columns are N(+mean_rel, sd_rel^2) for positives and
/// N(-mean_rel, sd_rel^2) for negatives, irrelevant columns N(0, sd_irrel^2) for everyone.
/// Outlier rows draw their relevant columns from N(outlier_mean, outlier_sd^2) and their irrelevant
/// columns as usual; set outliers_all_columns to corrupt every column instead.
struct SyntheticSpec {
  Index p = 200;
  Index s_true = 40;
  /// Includes the outlier rows.
  Index n_pos_labeled = 100;
  Index n_unlabeled = 300;
  Index n_unlabeled_pos = 20;
  Index n_outliers = 7;
  double mean_rel = 1.0;
  double sd_rel = 7.0;
  double sd_irrel = 5.0;
  double outlier_mean = -10.0;
  double outlier_sd = 1.0;
  Index n_test_pos = 1200;
  Index n_test_neg = 2800;
  std::uint64_t seed = 1;
  /// Scatter the relevant features over random columns instead of the first s_true.
  bool permute_columns = false;
  /// Corrupt every column of an outlier row, or only the relevant ones.
  bool outliers_all_columns = false;

  void validate() const {
    detail::require(p >= 1, "synthetic spec: p must be at least 1");
    detail::require(s_true <= p, "synthetic spec: s_true exceeds p");
    detail::require(n_outliers <= n_pos_labeled, "synthetic spec: more outliers than labeled positives");
    detail::require(n_unlabeled_pos <= n_unlabeled, "synthetic spec: n_unlabeled_pos exceeds n_unlabeled");
    detail::require(n_pos_labeled >= 1 && n_unlabeled >= 1, "synthetic spec: need labeled and unlabeled samples");
    detail::require(sd_rel > 0.0 && sd_irrel > 0.0 && outlier_sd > 0.0, "synthetic spec: standard deviations must be > 0");
  }
};

struct SyntheticBundle {
  PUDataset train;
  LabeledDataset test;
  /// Ascending 0-based column indices of the relevant features.
  std::vector<Index> true_support;
  /// 0-based rows of train.positives that are outliers.
  std::vector<Index> outlier_indices;
  /// +1 / -1 hidden truth of each row of train.unlabeled.
  std::vector<int> unlabeled_truth;
};

namespace detail {

class RowSampler {
 public:
  RowSampler(const SyntheticSpec& spec, Rng& rng, std::vector<char> relevant)
      : spec_(spec), rng_(rng), relevant_(std::move(relevant)) {}

  void fill(Eigen::Ref<Matrix> out, Eigen::Index row, int cls) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      if (relevant_[static_cast<Index>(j)]) {
        out(row, j) = rng_.normal(cls * spec_.mean_rel, spec_.sd_rel);
      } else {
        out(row, j) = rng_.normal(0.0, spec_.sd_irrel);
      }
    }
  }

  void fill_outlier(Eigen::Ref<Matrix> out, Eigen::Index row) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      if (spec_.outliers_all_columns || relevant_[static_cast<Index>(j)]) {
        out(row, j) = rng_.normal(spec_.outlier_mean, spec_.outlier_sd);
      } else {
        out(row, j) = rng_.normal(0.0, spec_.sd_irrel);
      }
    }
  }

 private:
  const SyntheticSpec& spec_;
  Rng& rng_;
  std::vector<char> relevant_;
};

}  // namespace detail

inline SyntheticBundle generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto p = static_cast<Eigen::Index>(spec.p);

  std::vector<Index> cols(spec.p);
  std::iota(cols.begin(), cols.end(), Index{0});
  if (spec.permute_columns) rng.shuffle(cols);
  std::vector<Index> support(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(spec.s_true));
  std::sort(support.begin(), support.end());
  std::vector<char> relevant(spec.p, 0);
  for (Index j : support) relevant[j] = 1;
  detail::RowSampler sampler(spec, rng, relevant);

  SyntheticBundle out;
  out.true_support = support;

  Matrix pos(static_cast<Eigen::Index>(spec.n_pos_labeled), p);
  const Index n_clean = spec.n_pos_labeled - spec.n_outliers;
  for (Index i = 0; i < n_clean; ++i) sampler.fill(pos, static_cast<Eigen::Index>(i), +1);
  for (Index i = n_clean; i < spec.n_pos_labeled; ++i) {
    sampler.fill_outlier(pos, static_cast<Eigen::Index>(i));
    out.outlier_indices.push_back(i);
  }

  std::vector<int> truth(spec.n_unlabeled, -1);
  std::fill(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(spec.n_unlabeled_pos), 1);
  rng.shuffle(truth);
  Matrix unl(static_cast<Eigen::Index>(spec.n_unlabeled), p);
  for (Index j = 0; j < spec.n_unlabeled; ++j) sampler.fill(unl, static_cast<Eigen::Index>(j), truth[j]);
  out.unlabeled_truth = std::move(truth);
  out.train = PUDataset(std::move(pos), std::move(unl));

  const Index n_test = spec.n_test_pos + spec.n_test_neg;
  Matrix tx(static_cast<Eigen::Index>(n_test), p);
  std::vector<int> ty(n_test);
  for (Index i = 0; i < n_test; ++i) {
    ty[i] = i < spec.n_test_pos ? 1 : -1;
    sampler.fill(tx, static_cast<Eigen::Index>(i), ty[i]);
  }
  out.test = LabeledDataset(std::move(tx), std::move(ty));
  return out;
}

struct SeriesPoint {
  Index n = 0;
  Index repeat = 0;
  SyntheticBundle bundle;
};

/// Clean all-relevant bundles with a fixed labeled-positive count and a growing unlabeled pool.
inline std::vector<SeriesPoint> figure1_series(Index n_pos, const std::vector<Index>& n_grid, double frac_pos,
                                               Index repeats, std::uint64_t base_seed, Index p = 20,
                                               Index n_test_each = 2000) {
  detail::require(!n_grid.empty(), "figure1_series: empty grid");
  detail::require(std::is_sorted(n_grid.begin(), n_grid.end()) &&
                      std::adjacent_find(n_grid.begin(), n_grid.end()) == n_grid.end(),
                  "figure1_series: grid must be strictly ascending");
  detail::require(repeats >= 1, "figure1_series: repeats must be at least 1");
  detail::require(frac_pos >= 0.0 && frac_pos < 1.0, "figure1_series: positive fraction must lie in [0, 1)");
  std::vector<SeriesPoint> out;
  for (Index n : n_grid) {
    for (Index r = 0; r < repeats; ++r) {
      SyntheticSpec spec;
      spec.p = p;
      spec.s_true = p;
      spec.n_pos_labeled = n_pos;
      spec.n_unlabeled = n;
      spec.n_unlabeled_pos = static_cast<Index>(std::llround(frac_pos * static_cast<double>(n)));
      spec.n_outliers = 0;
      spec.n_test_pos = n_test_each;
      spec.n_test_neg = n_test_each;
      spec.seed = derive_seed(base_seed, n, r);
      out.push_back({n, r, generate(spec)});
    }
  }
  return out;
}

}  // namespace pu
