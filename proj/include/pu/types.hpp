#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pu {

using Vector = Eigen::VectorXd;
/// One sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = std::size_t;

/// Malformed or inconsistent input data (bad CSV cell, shape mismatch, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline void require_data(bool ok, const std::string& what) {
  if (!ok) throw DataError(what);
}

}  // namespace detail

/// Labeled positives plus an unlabeled pool that mixes both classes.
struct PUDataset {
  Matrix positives;
  Matrix unlabeled;
  std::vector<std::string> feature_names;

  PUDataset() = default;
  PUDataset(Matrix pos, Matrix unl, std::vector<std::string> names = {})
      : positives(std::move(pos)), unlabeled(std::move(unl)), feature_names(std::move(names)) {
    validate();
  }

  Index dim() const { return static_cast<Index>(positives.cols()); }
  Index n_pos() const { return static_cast<Index>(positives.rows()); }
  Index n_unl() const { return static_cast<Index>(unlabeled.rows()); }

  void validate() const {
    detail::require_data(positives.rows() >= 1, "PUDataset: need at least one labeled positive");
    detail::require_data(unlabeled.rows() >= 1, "PUDataset: need at least one unlabeled sample");
    detail::require_data(positives.cols() == unlabeled.cols(),
                         "PUDataset: positives have " + std::to_string(positives.cols()) +
                             " columns but unlabeled have " + std::to_string(unlabeled.cols()));
    detail::require_data(positives.allFinite() && unlabeled.allFinite(),
                         "PUDataset: non-finite feature value");
    detail::require_data(feature_names.empty() || feature_names.size() == dim(),
                         "PUDataset: feature_names size does not match column count");
  }
};

/// Fully labeled data with labels in {+1, -1}.
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;

  LabeledDataset() = default;
  LabeledDataset(Matrix x, std::vector<int> y) : features(std::move(x)), labels(std::move(y)) {
    validate();
  }

  Index dim() const { return static_cast<Index>(features.cols()); }
  Index size() const { return labels.size(); }

  void validate() const {
    detail::require_data(static_cast<Index>(features.rows()) == labels.size(),
                         "LabeledDataset: row count does not match label count");
    for (Index i = 0; i < labels.size(); ++i) {
      detail::require_data(labels[i] == 1 || labels[i] == -1,
                           "LabeledDataset: label at row " + std::to_string(i + 1) + " is not +1/-1");
    }
    detail::require_data(features.allFinite(), "LabeledDataset: non-finite feature value");
  }
};

}  // namespace pu
