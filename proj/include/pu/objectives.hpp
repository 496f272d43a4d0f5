#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "pu/types.hpp"

namespace pu {

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// 1 / (1 + exp(-z)) without overflow.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct BaucOfParams {
  double alpha = 1e-3;
  double beta = 1e-3;

  void validate() const {
    detail::require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be finite and nonnegative");
    detail::require(std::isfinite(beta) && beta >= 0.0, "beta must be finite and nonnegative");
  }
};

struct ErrOfParams {
  double alpha = 1e-3;
  double beta = 1e-3;
  double pi = 0.5;

  void validate() const {
    detail::require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be finite and nonnegative");
    detail::require(std::isfinite(beta) && beta >= 0.0, "beta must be finite and nonnegative");
    detail::require(pi > 0.0 && pi < 1.0, "class prior pi must lie strictly inside (0, 1)");
  }
};

struct Gradient {
  Vector d_w;
  Vector d_eps;
  std::optional<double> d_b;
};

namespace detail {

inline void check_shapes(const Vector& w, const Vector& eps, const PUDataset& data) {
  require(static_cast<Index>(w.size()) == data.dim(),
          "weight dimension " + std::to_string(w.size()) + " does not match data dimension " +
              std::to_string(data.dim()));
  require(static_cast<Index>(eps.size()) == data.n_pos(),
          "slack dimension " + std::to_string(eps.size()) + " does not match positive count " +
              std::to_string(data.n_pos()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Blind-AUC objective
//
//   F(w, eps) = alpha/2 |eps|^2 + beta/2 |w|^2
//             + 1/(n+ n) sum_{i, j} softplus(-(w'(x+_i - x_j) + eps_i))
// ---------------------------------------------------------------------------

/// Logistic pairwise loss h = softplus(-z), z = w'(x_pos - x_unl) + eps_i.
inline double pair_loss(const Vector& w, double eps_i, const Vector& x_pos, const Vector& x_unl) {
  detail::require(w.size() == x_pos.size() && w.size() == x_unl.size(), "pair_loss: dimension mismatch");
  return softplus(-(w.dot(x_pos - x_unl) + eps_i));
}

inline double bauc_of_value(const Vector& w, const Vector& eps, const PUDataset& data, const BaucOfParams& params) {
  detail::check_shapes(w, eps, data);
  const Vector sp = data.positives * w + eps;
  const Vector su = data.unlabeled * w;
  double total = 0.0;
  for (Eigen::Index i = 0; i < sp.size(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < su.size(); ++j) row += softplus(su[j] - sp[i]);
    total += row;
  }
  const double pairs = static_cast<double>(data.n_pos()) * static_cast<double>(data.n_unl());
  return 0.5 * params.alpha * eps.squaredNorm() + 0.5 * params.beta * w.squaredNorm() + total / pairs;
}

inline Gradient bauc_of_grad_full(const Vector& w, const Vector& eps, const PUDataset& data,
                                  const BaucOfParams& params) {
  detail::check_shapes(w, eps, data);
  const Vector sp = data.positives * w + eps;
  const Vector su = data.unlabeled * w;
  // dh/dz = -sigmoid(-z); accumulate per positive row and per unlabeled column.
  Vector row_sum = Vector::Zero(sp.size());
  Vector col_sum = Vector::Zero(su.size());
  for (Eigen::Index i = 0; i < sp.size(); ++i) {
    for (Eigen::Index j = 0; j < su.size(); ++j) {
      const double c = -sigmoid(su[j] - sp[i]);
      row_sum[i] += c;
      col_sum[j] += c;
    }
  }
  const double pairs = static_cast<double>(data.n_pos()) * static_cast<double>(data.n_unl());
  Gradient g;
  g.d_w = (data.positives.transpose() * row_sum - data.unlabeled.transpose() * col_sum) / pairs + params.beta * w;
  g.d_eps = row_sum / pairs + params.alpha * eps;
  return g;
}

/// Gradient of the terms that involve unlabeled sample `j` only, rescaled so that the
/// mean over all j equals the full gradient.
inline Gradient bauc_of_grad_stoch(const Vector& w, const Vector& eps, const PUDataset& data,
                                   const BaucOfParams& params, Index unlabeled_index) {
  detail::check_shapes(w, eps, data);
  detail::require(unlabeled_index < data.n_unl(), "bauc_of_grad_stoch: unlabeled index " +
                                                      std::to_string(unlabeled_index) + " out of range");
  const auto xj = data.unlabeled.row(static_cast<Eigen::Index>(unlabeled_index));
  const double su = xj.dot(w);
  Vector c = data.positives * w + eps;
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = -sigmoid(su - c[i]);
  const double np = static_cast<double>(data.n_pos());
  Gradient g;
  g.d_w = (data.positives.transpose() * c - c.sum() * xj.transpose()) / np + params.beta * w;
  g.d_eps = c / np + params.alpha * eps;
  return g;
}

// ---------------------------------------------------------------------------
// Error-minimization objective with outlier slack
//
//   F(w, b, eps) = beta/2 |w|^2 + alpha/2 |eps|^2
//                + pi/n+ sum_i (w'x+_i + b - eps_i)
//                + 1/n+  sum_i softplus(eps_i + b - w'x+_i)
//                + 1/n   sum_j softplus(b - w'x_j)
// ---------------------------------------------------------------------------

inline double err_of_value(const Vector& w, double b, const Vector& eps, const PUDataset& data,
                           const ErrOfParams& params) {
  detail::check_shapes(w, eps, data);
  params.validate();
  const Vector sp = data.positives * w;
  const Vector su = data.unlabeled * w;
  double lin = 0.0, pos = 0.0, unl = 0.0;
  for (Eigen::Index i = 0; i < sp.size(); ++i) {
    lin += sp[i] + b - eps[i];
    pos += softplus(eps[i] + b - sp[i]);
  }
  for (Eigen::Index j = 0; j < su.size(); ++j) unl += softplus(b - su[j]);
  const double np = static_cast<double>(data.n_pos());
  const double nu = static_cast<double>(data.n_unl());
  return 0.5 * params.beta * w.squaredNorm() + 0.5 * params.alpha * eps.squaredNorm() + params.pi * lin / np +
         pos / np + unl / nu;
}

namespace detail {

/// ERR-OF gradient where the unlabeled average runs over `unl_rows` with weight 1/|unl_rows|.
template <class UnlRows>
Gradient err_of_grad_over(const Vector& w, double b, const Vector& eps, const PUDataset& data,
                          const ErrOfParams& params, const UnlRows& unl_rows) {
  const double np = static_cast<double>(data.n_pos());
  const double nu = static_cast<double>(unl_rows.rows());
  const Vector sp = data.positives * w;
  const Vector su = unl_rows * w;
  Vector cp(sp.size());
  for (Eigen::Index i = 0; i < sp.size(); ++i) cp[i] = sigmoid(eps[i] + b - sp[i]);
  Vector cu(su.size());
  for (Eigen::Index j = 0; j < su.size(); ++j) cu[j] = sigmoid(b - su[j]);

  Gradient g;
  g.d_w = params.beta * w +
          data.positives.transpose() * (Vector::Constant(cp.size(), params.pi) - cp) / np -
          unl_rows.transpose() * cu / nu;
  g.d_eps = params.alpha * eps + (cp.array() - params.pi).matrix() / np;
  g.d_b = params.pi + cp.sum() / np + cu.sum() / nu;
  return g;
}

}  // namespace detail

inline Gradient err_of_grad(const Vector& w, double b, const Vector& eps, const PUDataset& data,
                            const ErrOfParams& params) {
  detail::check_shapes(w, eps, data);
  params.validate();
  return detail::err_of_grad_over(w, b, eps, data, params, data.unlabeled);
}

/// Unbiased estimate of err_of_grad using a single unlabeled sample.
inline Gradient err_of_grad_stoch(const Vector& w, double b, const Vector& eps, const PUDataset& data,
                                  const ErrOfParams& params, Index unlabeled_index) {
  detail::check_shapes(w, eps, data);
  detail::require(unlabeled_index < data.n_unl(), "err_of_grad_stoch: unlabeled index out of range");
  return detail::err_of_grad_over(w, b, eps, data, params,
                                  data.unlabeled.middleRows(static_cast<Eigen::Index>(unlabeled_index), 1));
}

}  // namespace pu
