#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pu/metrics.hpp"
#include "pu/model.hpp"
#include "pu/objectives.hpp"
#include "pu/rng.hpp"
#include "pu/sparse_proj.hpp"

namespace pu {

enum class LrDecay { Constant, InverseSqrt };

struct TrainConfig {
  ObjectiveKind objective = ObjectiveKind::BaucOF;
  double alpha = 1e-3;
  double beta = 1e-3;
  /// Class prior of the unlabeled pool; required by the error objective.
  std::optional<double> pi;
  /// Constraint on w; unset means no constraint.
  std::optional<SparsityHypothesis> hypothesis;
  /// Outlier budget: at most t nonzero slack entries.
  Index t = 0;
  double lr = 0.1;
  LrDecay lr_decay = LrDecay::InverseSqrt;
  Index epochs = 200;
  /// Stop when the relative change of the full objective between epochs drops below tol.
  double tol = 1e-6;
  std::uint64_t seed = 0;
  bool standardize = false;
  /// Step multiplier for the slack block relative to lr; 0 selects n+ (see psg_fit).
  double eps_step_scale = 0.0;
  /// Epochs at the start during which the slack is left dense (budget n+). Ignored when t = 0.
  Index eps_warmup_epochs = 0;

  BaucOfParams bauc_params() const { return {alpha, beta}; }
  ErrOfParams err_params() const {
    detail::require(pi.has_value(), "the error objective requires a class prior pi");
    return {alpha, beta, *pi};
  }

  void validate(const PUDataset& data) const {
    if (objective == ObjectiveKind::ErrOF) {
      err_params().validate();
    } else {
      bauc_params().validate();
    }
    detail::require(t <= data.n_pos(), "outlier budget t=" + std::to_string(t) + " exceeds positive count " +
                                           std::to_string(data.n_pos()));
    if (hypothesis) {
      detail::require(hypothesis->dim() == data.dim(), "hypothesis dimension " + std::to_string(hypothesis->dim()) +
                                                           " does not match data dimension " +
                                                           std::to_string(data.dim()));
    }
    detail::require(std::isfinite(lr) && lr > 0.0, "learning rate must be finite and positive");
    detail::require(epochs >= 1, "epochs must be at least 1");
    detail::require(tol >= 0.0, "tol must be nonnegative");
    detail::require(eps_step_scale >= 0.0 && std::isfinite(eps_step_scale), "eps_step_scale must be >= 0");
  }
};

enum class StopReason { MaxEpochs, TolReached };

inline std::string to_string(StopReason r) { return r == StopReason::MaxEpochs ? "max_epochs" : "tol_reached"; }

struct TrainTrace {
  std::vector<double> objective;
  std::vector<double> train_bauc;
  Index epochs_run = 0;
  StopReason stop = StopReason::MaxEpochs;
};

struct FitResult {
  Model model;
  TrainTrace trace;
};

namespace detail {

/// Iterate state of one projected stochastic gradient run. Works in the (possibly standardized)
/// training coordinates.
class PsgRun {
 public:
  PsgRun(const PUDataset& data, const TrainConfig& cfg)
      : data_(data),
        cfg_(cfg),
        w_(Vector::Zero(static_cast<Eigen::Index>(data.dim()))),
        eps_(Vector::Zero(static_cast<Eigen::Index>(data.n_pos()))),
        c_(static_cast<Eigen::Index>(data.n_pos())),
        gw_(static_cast<Eigen::Index>(data.dim())) {
    project_w_ = cfg.hypothesis && !cfg.hypothesis->is_full();
    eps_scale_ = cfg.eps_step_scale > 0.0 ? cfg.eps_step_scale : static_cast<double>(data.n_pos());
    budget_ = cfg.t;
  }

  double objective() const {
    if (cfg_.objective == ObjectiveKind::BaucOF) return bauc_of_value(w_, eps_, data_, cfg_.bauc_params());
    return err_of_value(w_, b_, eps_, data_, cfg_.err_params());
  }

  double train_bauc() const {
    Vector sp = data_.positives * w_;
    Vector su = data_.unlabeled * w_;
    return empirical_bauc(as_span(sp), as_span(su));
  }

  /// While warm, both constraints are lifted.
  void set_warm(bool warm) {
    warm_ = warm;
    budget_ = warm ? data_.n_pos() : cfg_.t;
  }

  /// One stochastic step on unlabeled sample j followed by both projections.
  /// Returns false if the iterate became non-finite.
  bool step(Index j, double eta) {
    const auto xj = data_.unlabeled.row(static_cast<Eigen::Index>(j));
    const double np = static_cast<double>(data_.n_pos());
    if (cfg_.objective == ObjectiveKind::BaucOF) {
      const double su = xj.dot(w_);
      c_.noalias() = data_.positives * w_;
      for (Eigen::Index i = 0; i < c_.size(); ++i) c_[i] = -sigmoid(su - (c_[i] + eps_[i]));
      gw_.noalias() = data_.positives.transpose() * c_;
      gw_ -= c_.sum() * xj.transpose();
      gw_ /= np;
      gw_ += cfg_.beta * w_;
      // slack gradient: c / n+ + alpha * eps
      w_ -= eta * gw_;
      eps_ -= (eta * eps_scale_) * (c_ / np + cfg_.alpha * eps_);
    } else {
      const Gradient g = err_of_grad_stoch(w_, b_, eps_, data_, cfg_.err_params(), j);
      w_ -= eta * g.d_w;
      eps_ -= (eta * eps_scale_) * g.d_eps;
      b_ -= eta * *g.d_b;
    }
    if (project_w_ && !warm_) w_ = project(w_, *cfg_.hypothesis).projected;
    if (budget_ < data_.n_pos()) eps_ = project_l0(eps_, budget_).projected;
    return w_.allFinite() && eps_.allFinite() && std::isfinite(b_);
  }

  bool feasible() const {
    const bool eps_ok = static_cast<Index>((eps_.array() != 0.0).count()) <= cfg_.t;
    return eps_ok && (!cfg_.hypothesis || hypothesis_contains(w_, *cfg_.hypothesis));
  }

  const Vector& w() const { return w_; }
  const Vector& eps() const { return eps_; }
  double b() const { return b_; }

 private:
  const PUDataset& data_;
  const TrainConfig& cfg_;
  Vector w_;
  Vector eps_;
  double b_ = 0.0;
  Vector c_;
  Vector gw_;
  bool project_w_ = false;
  bool warm_ = false;
  double eps_scale_ = 1.0;
  Index budget_ = 0;
};

}  // namespace detail

/// Projected stochastic gradient training. Starts from w = 0, eps = 0, b = 0; each epoch is one
/// seeded shuffled pass over the unlabeled rows. After every step w is projected onto the
/// hypothesis and eps onto {|eps|_0 <= t}.
///
/// Step size at global step k is lr (constant) or lr / sqrt(1 + k / n). The slack block moves
/// with an extra factor eps_step_scale (default n+): its gradient carries a 1/n+ factor that
/// w's does not, and without the rescale the hard-thresholded slack cannot move away from
/// whichever entries it picked first.
inline FitResult psg_fit(const PUDataset& data, const TrainConfig& config) {
  data.validate();
  config.validate(data);

  std::optional<Standardizer> standardizer;
  PUDataset scaled;
  const PUDataset* train = &data;
  if (config.standardize) {
    standardizer = Standardizer::fit({&data.positives, &data.unlabeled});
    scaled = PUDataset(standardizer->apply(data.positives), standardizer->apply(data.unlabeled), data.feature_names);
    train = &scaled;
  }

  detail::PsgRun run(*train, config);
  Rng rng(config.seed);
  std::vector<Index> order(train->n_unl());
  std::iota(order.begin(), order.end(), Index{0});
  const double n = static_cast<double>(train->n_unl());

  TrainTrace trace;
  const bool constrained = config.t > 0 || (config.hypothesis && !config.hypothesis->is_full());
  std::uint64_t k = 0;
  double prev = run.objective();
  for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    const bool warm = constrained && epoch < config.epochs && epoch <= config.eps_warmup_epochs;
    run.set_warm(warm);
    for (Index pos = 0; pos < order.size(); ++pos) {
      const double eta = config.lr_decay == LrDecay::Constant
                             ? config.lr
                             : config.lr / std::sqrt(1.0 + static_cast<double>(k) / n);
      if (!run.step(order[pos], eta)) {
        throw NumericError("non-finite iterate at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(pos + 1));
      }
      ++k;
    }
    const double obj = run.objective();
    if (!std::isfinite(obj)) {
      throw NumericError("non-finite objective at epoch " + std::to_string(epoch) + ", step " +
                         std::to_string(order.size()));
    }
    if (!warm && !run.feasible()) throw std::logic_error("psg_fit: iterate left the constraint set");
    trace.objective.push_back(obj);
    trace.train_bauc.push_back(run.train_bauc());
    trace.epochs_run = epoch;
    if (!warm && std::abs(obj - prev) <= config.tol * std::max(std::abs(prev), 1e-300)) {
      trace.stop = StopReason::TolReached;
      break;
    }
    prev = obj;
  }

  FitResult out;
  out.model.w = run.w();
  out.model.eps = run.eps();
  if (config.objective == ObjectiveKind::ErrOF) out.model.b = run.b();
  out.model.hypothesis = config.hypothesis ? *config.hypothesis : SparsityHypothesis::full(data.dim());
  out.model.objective = config.objective;
  out.model.standardizer = std::move(standardizer);
  out.trace = std::move(trace);
  return out;
}

struct TuneOptions {
  /// Score candidates on the training data instead of the holdout split.
  bool use_training_bauc = false;
  /// A step is accepted only if BAUC rises by more than this.
  double min_improvement = 1e-3;
};

struct TuneStep {
  Index s = 0;
  Index t = 0;
  double bauc = 0.0;
  bool accepted = false;
};

struct TuneResult {
  TrainConfig config;
  std::vector<TuneStep> history;
  std::vector<std::string> warnings;
};

/// Greedy coordinate search over (s, t). Starts at the smallest grid values and alternately tries
/// the next s, then the next t; a step is kept when BAUC improves by more than min_improvement.
/// Stops once neither next step is kept. The s grid is ignored for group and exclusive hypotheses.
inline TuneResult greedy_tune(const PUDataset& data, const PUDataset& holdout, const TrainConfig& base,
                              const std::vector<Index>& t_grid, const std::vector<Index>& s_grid,
                              const TuneOptions& options = {}) {
  detail::require(!t_grid.empty(), "greedy_tune: empty t grid");
  detail::require(!s_grid.empty(), "greedy_tune: empty s grid");
  detail::require(std::is_sorted(t_grid.begin(), t_grid.end()), "greedy_tune: t grid must be ascending");
  detail::require(std::is_sorted(s_grid.begin(), s_grid.end()), "greedy_tune: s grid must be ascending");
  detail::require(holdout.dim() == data.dim(), "greedy_tune: holdout dimension does not match training data");

  TuneResult result;
  const bool sweep_s = !base.hypothesis || std::holds_alternative<PlainL0>(base.hypothesis->variant());
  if (!sweep_s) result.warnings.push_back("s grid ignored: hypothesis is " + base.hypothesis->describe());
  const Index s_last = sweep_s ? s_grid.size() - 1 : 0;

  std::map<std::pair<Index, Index>, double> cache;
  auto evaluate = [&](Index si, Index ti) {
    const auto key = std::make_pair(si, ti);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    TrainConfig cfg = base;
    cfg.t = t_grid[ti];
    if (sweep_s) cfg.hypothesis = SparsityHypothesis::plain_l0(data.dim(), s_grid[si]);
    const Model m = psg_fit(data, cfg).model;
    const double v = empirical_bauc(m, options.use_training_bauc ? data : holdout);
    cache.emplace(key, v);
    return v;
  };
  auto record = [&](Index si, Index ti, double v, bool ok) {
    result.history.push_back({sweep_s ? s_grid[si] : 0, t_grid[ti], v, ok});
  };

  Index si = 0, ti = 0;
  double best = evaluate(si, ti);
  record(si, ti, best, true);
  for (bool moved = true; moved;) {
    moved = false;
    if (si < s_last) {
      const double v = evaluate(si + 1, ti);
      const bool ok = v > best + options.min_improvement;
      record(si + 1, ti, v, ok);
      if (ok) {
        ++si;
        best = v;
        moved = true;
      }
    }
    if (ti + 1 < t_grid.size()) {
      const double v = evaluate(si, ti + 1);
      const bool ok = v > best + options.min_improvement;
      record(si, ti + 1, v, ok);
      if (ok) {
        ++ti;
        best = v;
        moved = true;
      }
    }
  }

  result.config = base;
  result.config.t = t_grid[ti];
  if (sweep_s) result.config.hypothesis = SparsityHypothesis::plain_l0(data.dim(), s_grid[si]);
  return result;
}

}  // namespace pu
