#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pu/sparse_proj.hpp"
#include "pu/types.hpp"

namespace pu {

enum class ObjectiveKind { BaucOF, ErrOF };

inline std::string to_string(ObjectiveKind k) { return k == ObjectiveKind::BaucOF ? "bauc" : "err"; }

/// Per-column z-score transform, x -> (x - mean) / scale.
struct Standardizer {
  Vector mean;
  Vector scale;

  /// Statistics over the stacked rows of all given matrices; zero-variance columns get scale 1.
  static Standardizer fit(std::initializer_list<const Matrix*> parts) {
    Index cols = 0;
    double rows = 0.0;
    for (const Matrix* m : parts) {
      cols = static_cast<Index>(m->cols());
      rows += static_cast<double>(m->rows());
    }
    Standardizer st;
    st.mean = Vector::Zero(static_cast<Eigen::Index>(cols));
    for (const Matrix* m : parts) st.mean += m->colwise().sum().transpose();
    st.mean /= rows;
    Vector sq = Vector::Zero(static_cast<Eigen::Index>(cols));
    for (const Matrix* m : parts) sq += (m->rowwise() - st.mean.transpose()).array().square().colwise().sum().matrix().transpose();
    st.scale = (sq / rows).array().sqrt();
    for (Eigen::Index j = 0; j < st.scale.size(); ++j) {
      if (!(st.scale[j] > 0.0)) st.scale[j] = 1.0;
    }
    return st;
  }

  Matrix apply(const Matrix& x) const {
    return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
  }
};

/// A trained linear scorer f(x) = w'x (+ b), with the outlier slack it was trained with.
struct Model {
  Vector w;
  Vector eps;
  std::optional<double> b;
  SparsityHypothesis hypothesis;
  ObjectiveKind objective = ObjectiveKind::BaucOF;
  /// Applied to raw features before the dot product when present.
  std::optional<Standardizer> standardizer;

  Index dim() const { return static_cast<Index>(w.size()); }
};

inline Vector score(const Model& model, const Matrix& features) {
  if (static_cast<Index>(features.cols()) != model.dim()) {
    throw DataError("score: model expects p=" + std::to_string(model.dim()) + " features, got p=" +
                    std::to_string(features.cols()));
  }
  Vector s = model.standardizer ? Vector(model.standardizer->apply(features) * model.w) : Vector(features * model.w);
  if (model.b) s.array() += *model.b;
  return s;
}

/// Sorted 0-based indices into the positive rows whose slack is nonzero.
inline std::vector<Index> detect_outliers(const Model& model) {
  std::vector<Index> out;
  for (Eigen::Index i = 0; i < model.eps.size(); ++i) {
    if (model.eps[i] != 0.0) out.push_back(static_cast<Index>(i));
  }
  return out;
}

}  // namespace pu
