#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "pu/model.hpp"
#include "pu/types.hpp"

namespace pu {

// Ranking metrics. Every pairwise comparison credits 1 for a strict win, 1/2 for a tie.

namespace detail {

/// Sum over all (a, b) pairs of [a > b] + 0.5 [a == b]. The result is a multiple of 0.5, exact in double.
inline double pairwise_wins(std::span<const double> high, std::span<const double> low) {
  std::vector<double> sorted(low.begin(), low.end());
  std::sort(sorted.begin(), sorted.end());
  double wins = 0.0;
  for (double a : high) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), a);
    const auto hi = std::upper_bound(lo, sorted.end(), a);
    wins += static_cast<double>(lo - sorted.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins;
}

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline void split_by_label(std::span<const double> scores, std::span<const int> labels, std::vector<double>& pos,
                           std::vector<double>& neg) {
  detail::require(scores.size() == labels.size(), "scores and labels differ in length");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    detail::require(labels[i] == 1 || labels[i] == -1, "labels must be +1 or -1");
    (labels[i] == 1 ? pos : neg).push_back(scores[i]);
  }
  detail::require(!pos.empty() && !neg.empty(), "AUC needs at least one positive and one negative label");
}

}  // namespace detail

inline double empirical_auc(std::span<const double> scores, std::span<const int> labels) {
  std::vector<double> pos, neg;
  detail::split_by_label(scores, labels, pos, neg);
  return detail::pairwise_wins(pos, neg) / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

inline double empirical_auc(const Vector& scores, std::span<const int> labels) {
  return empirical_auc(detail::as_span(scores), labels);
}

/// AUC that treats every unlabeled score as a negative.
inline double empirical_bauc(std::span<const double> pos_scores, std::span<const double> unl_scores) {
  detail::require(!pos_scores.empty() && !unl_scores.empty(), "BAUC needs nonempty positive and unlabeled sets");
  return detail::pairwise_wins(pos_scores, unl_scores) /
         (static_cast<double>(pos_scores.size()) * static_cast<double>(unl_scores.size()));
}

inline double empirical_bauc(const Model& model, const PUDataset& data) {
  const Vector sp = score(model, data.positives);
  const Vector su = score(model, data.unlabeled);
  return empirical_bauc(detail::as_span(sp), detail::as_span(su));
}

/// Inverts BAUC = (1 - pi) AUC + pi / 2. Not clamped to [0, 1].
inline double auc_from_bauc(double bauc, double pi) {
  detail::require(pi >= 0.0 && pi < 1.0, "auc_from_bauc: class prior must lie in [0, 1)");
  return (bauc - pi / 2.0) / (1.0 - pi);
}

struct BaucDecomposition {
  double bauc = 0.0;
  double auc_vs_true_negatives = 0.0;
  double within_positive_rate = 0.0;
  double pi_hat = 0.0;
};

/// Splits empirical BAUC by the hidden truth of the unlabeled samples:
/// bauc == (1 - pi_hat) * auc_vs_true_negatives + pi_hat * within_positive_rate.
/// within_positive_rate is 1/2 when no unlabeled sample is truly positive.
inline BaucDecomposition decompose_bauc(std::span<const double> labeled_pos, std::span<const double> unlabeled,
                                        std::span<const int> unlabeled_truth) {
  detail::require(unlabeled.size() == unlabeled_truth.size(), "decompose_bauc: truth length mismatch");
  detail::require(!labeled_pos.empty(), "decompose_bauc: no labeled positives");
  std::vector<double> hidden_pos, hidden_neg;
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    detail::require(unlabeled_truth[i] == 1 || unlabeled_truth[i] == -1, "decompose_bauc: truth must be +1/-1");
    (unlabeled_truth[i] == 1 ? hidden_pos : hidden_neg).push_back(unlabeled[i]);
  }
  detail::require(!hidden_neg.empty(), "decompose_bauc: no truly negative unlabeled samples");
  const double np = static_cast<double>(labeled_pos.size());
  const double wins_neg = detail::pairwise_wins(labeled_pos, hidden_neg);
  const double wins_pos = detail::pairwise_wins(labeled_pos, hidden_pos);
  BaucDecomposition d;
  d.pi_hat = static_cast<double>(hidden_pos.size()) / static_cast<double>(unlabeled.size());
  d.bauc = (wins_neg + wins_pos) / (np * static_cast<double>(unlabeled.size()));
  d.auc_vs_true_negatives = wins_neg / (np * static_cast<double>(hidden_neg.size()));
  d.within_positive_rate = hidden_pos.empty() ? 0.5 : wins_pos / (np * static_cast<double>(hidden_pos.size()));
  return d;
}

struct RocCurve {
  /// Descending; the first entry is +inf and yields the (0, 0) point.
  std::vector<double> thresholds;
  std::vector<double> tpr;
  std::vector<double> fpr;
  double auc = 0.0;
};

/// Threshold sweep over distinct scores, predicting positive when score >= threshold.
inline RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  std::vector<double> pos, neg;
  detail::split_by_label(scores, labels, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  RocCurve roc;
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());
  roc.tpr.push_back(0.0);
  roc.fpr.push_back(0.0);
  std::size_t tp = 0, fp = 0;
  // Integrate in counts so the area stays a multiple of 1/2 before the final division.
  double area = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double thr = scores[order[k]];
    const std::size_t tp0 = tp, fp0 = fp;
    while (k < order.size() && scores[order[k]] == thr) {
      (labels[order[k]] == 1 ? tp : fp) += 1;
      ++k;
    }
    area += 0.5 * static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0);
    roc.thresholds.push_back(thr);
    roc.tpr.push_back(static_cast<double>(tp) / np);
    roc.fpr.push_back(static_cast<double>(fp) / nn);
  }
  roc.auc = area / (np * nn);
  return roc;
}

inline RocCurve roc_curve(const Vector& scores, std::span<const int> labels) {
  return roc_curve(detail::as_span(scores), labels);
}

}  // namespace pu
