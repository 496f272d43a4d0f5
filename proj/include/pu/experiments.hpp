#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pu/datagen.hpp"
#include "pu/io.hpp"
#include "pu/metrics.hpp"
#include "pu/solver.hpp"

namespace pu {

enum class SweepKind { Features, Outliers };
enum class Method { BAUC, BAUC_O, BAUC_OF, ERR, ERR_O, ERR_OF };

inline constexpr Method kAllMethods[] = {Method::BAUC, Method::BAUC_O, Method::BAUC_OF,
                                         Method::ERR,  Method::ERR_O,  Method::ERR_OF};

inline std::string to_string(SweepKind k) { return k == SweepKind::Features ? "features" : "outliers"; }

inline std::string to_string(Method m) {
  switch (m) {
    case Method::BAUC: return "BAUC";
    case Method::BAUC_O: return "BAUC_O";
    case Method::BAUC_OF: return "BAUC_OF";
    case Method::ERR: return "ERR";
    case Method::ERR_O: return "ERR_O";
    case Method::ERR_OF: return "ERR_OF";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : kAllMethods) {
    auto name = to_string(m);
    auto dashed = name;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    if (s == name || s == dashed) return m;
  }
  throw std::invalid_argument("unknown method '" + s + "'");
}

inline bool uses_outliers(Method m) { return m == Method::BAUC_O || m == Method::BAUC_OF || m == Method::ERR_O || m == Method::ERR_OF; }
inline bool uses_features(Method m) { return m == Method::BAUC_OF || m == Method::ERR_OF; }
inline bool is_err(Method m) { return m == Method::ERR || m == Method::ERR_O || m == Method::ERR_OF; }

/// How t and s are chosen for the -O and -OF methods.
enum class Tuning {
  /// t = planted outlier count, s = planted support size.
  Oracle,
  /// greedy_tune against a fresh holdout bundle drawn from the same generator.
  Greedy,
};

/// Solver settings shared by the sweep and Figure-1 harnesses.
inline TrainConfig experiment_base_config() {
  TrainConfig c;
  c.alpha = 1e-5;
  c.beta = 1.5;
  c.lr = 0.05;
  c.epochs = 100;
  c.standardize = true;
  c.eps_warmup_epochs = 5;
  return c;
}

/// Worker count from PU_THREADS, else the machine's parallelism.
inline Index default_threads() {
  if (const char* env = std::getenv("PU_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<Index>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct ExperimentSettings {
  std::uint64_t base_seed = 20240601;
  Index threads = 0;  // 0: default_threads()
  Tuning tuning = Tuning::Oracle;
  TrainConfig base = experiment_base_config();
  std::vector<Index> t_grid = {1, 3, 5, 7, 9, 11};
  std::vector<Index> s_grid = {10, 20, 40, 80, 120, 160, 200};
  /// Template for generated bundles; p, s_true and n_outliers are set per grid value.
  SyntheticSpec spec;
};

struct FitRecord {
  Index grid_value = 0;
  Index seed_index = 0;
  Method method = Method::BAUC;
  Index s = 0;
  Index t = 0;
  double auc = 0.0;
  double runtime_s = 0.0;
  std::vector<Index> support;
  std::vector<Index> outliers;
  /// Exact match with the planted outlier rows.
  bool outliers_exact = false;
};

struct ReportCell {
  Index grid_value = 0;
  Method method = Method::BAUC;
  Index seeds = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean_runtime_s = 0.0;
};

struct ExperimentReport {
  SweepKind kind = SweepKind::Features;
  std::vector<ReportCell> cells;
  std::vector<FitRecord> fits;

  const ReportCell& cell(Index grid_value, Method m) const {
    for (const auto& c : cells) {
      if (c.grid_value == grid_value && c.method == m) return c;
    }
    throw std::out_of_range("no report cell for grid value " + std::to_string(grid_value) + ", " + to_string(m));
  }
};

/// Bundle spec for one sweep point: features sweeps vary p with 7 outliers, outlier sweeps vary
/// the outlier count at p = 200; s_true is 40 in both.
inline SyntheticSpec sweep_spec(const ExperimentSettings& st, SweepKind kind, Index grid_value, Index seed_index) {
  SyntheticSpec spec = st.spec;
  spec.s_true = 40;
  if (kind == SweepKind::Features) {
    spec.p = grid_value;
    spec.n_outliers = 7;
  } else {
    spec.p = 200;
    spec.n_outliers = grid_value;
  }
  spec.seed = derive_seed(st.base_seed, grid_value, seed_index);
  return spec;
}

namespace detail {

/// Runs f(0), ..., f(n-1) on up to `threads` workers; rethrows the first failure.
template <class F>
void parallel_for(Index n, Index threads, F&& f) {
  threads = std::max<Index>(1, std::min(threads, n));
  if (threads == 1) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (Index k = 0; k < threads; ++k) {
    pool.emplace_back([&] {
      for (Index i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline void summarize(const std::vector<double>& v, double& mean, double& sd, double& lo, double& hi) {
  const double n = static_cast<double>(v.size());
  mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  lo = *std::min_element(v.begin(), v.end());
  hi = *std::max_element(v.begin(), v.end());
}

inline std::string join(const std::vector<Index>& v, char sep = ' ') {
  std::string out;
  for (Index k = 0; k < v.size(); ++k) {
    if (k) out += sep;
    out += std::to_string(v[k]);
  }
  return out;
}

inline std::vector<Index> nonzero_indices(const Vector& v) {
  std::vector<Index> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) out.push_back(static_cast<Index>(i));
  }
  return out;
}

}  // namespace detail

/// Fits one method on one bundle and evaluates test AUC.
inline FitRecord run_method(const SyntheticBundle& bundle, const SyntheticSpec& spec, Method method,
                            const ExperimentSettings& st, std::uint64_t fit_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg = st.base;
  cfg.seed = fit_seed;
  cfg.objective = is_err(method) ? ObjectiveKind::ErrOF : ObjectiveKind::BaucOF;
  if (is_err(method)) {
    cfg.pi = static_cast<double>(spec.n_unlabeled_pos) / static_cast<double>(spec.n_unlabeled);
  }
  const Index p = bundle.train.dim();
  cfg.t = 0;
  cfg.hypothesis = SparsityHypothesis::full(p);

  if (uses_outliers(method)) {
    if (st.tuning == Tuning::Oracle) {
      cfg.t = std::min(spec.n_outliers, bundle.train.n_pos());
      if (uses_features(method)) cfg.hypothesis = SparsityHypothesis::plain_l0(p, std::min(spec.s_true, p));
    } else {
      SyntheticSpec hs = spec;
      hs.seed = derive_seed(spec.seed, 0x686f6c64);
      hs.n_test_pos = 0;
      hs.n_test_neg = 0;
      const PUDataset holdout = generate(hs).train;
      std::vector<Index> t_grid;
      for (Index t : st.t_grid) {
        if (t <= bundle.train.n_pos()) t_grid.push_back(t);
      }
      if (t_grid.empty()) t_grid.push_back(0);
      std::vector<Index> s_grid{p};
      if (uses_features(method)) {
        s_grid.clear();
        for (Index s : st.s_grid) {
          if (s < p) s_grid.push_back(s);
        }
        s_grid.push_back(p);
      }
      cfg = greedy_tune(bundle.train, holdout, cfg, t_grid, s_grid).config;
    }
  }

  const FitResult fit = psg_fit(bundle.train, cfg);
  const Vector scores = score(fit.model, bundle.test.features);
  FitRecord rec;
  rec.method = method;
  rec.t = cfg.t;
  rec.s = static_cast<Index>(std::get<PlainL0>(cfg.hypothesis->variant()).s);
  rec.auc = empirical_auc(scores, bundle.test.labels);
  rec.support = detail::nonzero_indices(fit.model.w);
  rec.outliers = detect_outliers(fit.model);
  rec.outliers_exact = rec.outliers == bundle.outlier_indices;
  rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

/// Grid x seed x method sweep. Bundles use seeds derive_seed(base_seed, grid value, seed index);
/// each fit uses derive_seed(bundle seed, method index). Results do not depend on the thread count.
inline ExperimentReport run_table_sweep(SweepKind kind, const std::vector<Index>& grid,
                                        const std::vector<Method>& methods, Index seeds,
                                        const ExperimentSettings& st = {}) {
  detail::require(!grid.empty(), "run_table_sweep: empty grid");
  detail::require(!methods.empty(), "run_table_sweep: no methods");
  detail::require(seeds >= 1, "run_table_sweep: need at least one seed");

  const auto where = [](Index g, Index r, Method m) {
    return "sweep fit failed (grid value " + std::to_string(g) + ", seed " + std::to_string(r) + ", method " +
           to_string(m) + "): ";
  };
  const Index tasks = grid.size() * seeds;
  std::vector<std::vector<FitRecord>> per_task(tasks);
  detail::parallel_for(tasks, st.threads ? st.threads : default_threads(), [&](Index k) {
    const Index g = grid[k / seeds];
    const Index r = k % seeds;
    const SyntheticSpec spec = sweep_spec(st, kind, g, r);
    const SyntheticBundle bundle = generate(spec);
    for (Method m : methods) {
      try {
        FitRecord rec = run_method(bundle, spec, m, st, derive_seed(spec.seed, static_cast<Index>(m) + 1));
        rec.grid_value = g;
        rec.seed_index = r;
        per_task[k].push_back(std::move(rec));
      } catch (const NumericError& e) {
        throw NumericError(where(g, r, m) + e.what());
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(where(g, r, m) + e.what());
      } catch (const std::exception& e) {
        throw std::runtime_error(where(g, r, m) + e.what());
      }
    }
  });

  ExperimentReport rep;
  rep.kind = kind;
  for (auto& v : per_task) {
    for (auto& rec : v) rep.fits.push_back(std::move(rec));
  }
  for (Index g : grid) {
    for (Method m : methods) {
      std::vector<double> aucs, times;
      for (const auto& f : rep.fits) {
        if (f.grid_value == g && f.method == m) {
          aucs.push_back(f.auc);
          times.push_back(f.runtime_s);
        }
      }
      ReportCell c;
      c.grid_value = g;
      c.method = m;
      c.seeds = aucs.size();
      detail::summarize(aucs, c.mean, c.sd, c.min, c.max);
      c.mean_runtime_s = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
      rep.cells.push_back(c);
    }
  }
  return rep;
}

/// Writes `path` (one row per grid value and method, AUC in percent), `<stem>_fits.csv` (one row
/// per fit with support and outlier sets) and `<stem>_timing.csv`. Only the timing file varies
/// between identical runs.
inline void write_report(const ExperimentReport& rep, const std::string& path) {
  const std::filesystem::path base(path);
  const auto sibling = [&](const std::string& suffix) {
    return (base.parent_path() / (base.stem().string() + suffix)).string();
  };
  {
    auto out = detail::open_out(path);
    out << "kind,grid_value,method,seeds,mean_auc_pct,sd_auc_pct,min_auc_pct,max_auc_pct\n";
    for (const auto& c : rep.cells) {
      out << to_string(rep.kind) << ',' << c.grid_value << ',' << to_string(c.method) << ',' << c.seeds << ','
          << format_double(100.0 * c.mean) << ',' << format_double(100.0 * c.sd) << ','
          << format_double(100.0 * c.min) << ',' << format_double(100.0 * c.max) << '\n';
    }
  }
  {
    auto out = detail::open_out(sibling("_fits.csv"));
    out << "grid_value,seed_index,method,s,t,auc,outliers_exact,support,outliers\n";
    for (const auto& f : rep.fits) {
      out << f.grid_value << ',' << f.seed_index << ',' << to_string(f.method) << ',' << f.s << ',' << f.t << ','
          << format_double(f.auc) << ',' << (f.outliers_exact ? 1 : 0) << ',' << detail::join(f.support) << ','
          << detail::join(f.outliers) << '\n';
    }
  }
  {
    auto out = detail::open_out(sibling("_timing.csv"));
    out << "grid_value,method,mean_runtime_s\n";
    for (const auto& c : rep.cells) {
      out << c.grid_value << ',' << to_string(c.method) << ',' << format_double(c.mean_runtime_s) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Unlabeled-set size study
// ---------------------------------------------------------------------------

struct Figure1Settings {
  Index n_pos = 50;
  std::vector<Index> grid = [] {
    std::vector<Index> g;
    for (Index n = 10; n <= 200; n += 10) g.push_back(n);
    g.push_back(250);
    return g;
  }();
  double frac_pos = 0.10;
  Index repeats = 10;
  Index p = 20;
  Index n_test_each = 2000;
  std::uint64_t base_seed = 20240602;
  Index threads = 0;
  TrainConfig base = experiment_base_config();
};

struct Figure1Row {
  Index n = 0;
  Index repeats = 0;
  double mean_auc = 0.0;
  double sd_auc = 0.0;
  /// Estimated AUC from training BAUC minus test AUC.
  double mean_gap = 0.0;
  double sd_gap = 0.0;
};

/// Plain BAUC fits on clean bundles of growing unlabeled size. The estimate is
/// auc_from_bauc(training BAUC, known unlabeled positive fraction).
inline std::vector<Figure1Row> run_figure1(const Figure1Settings& st = {}) {
  const auto series = figure1_series(st.n_pos, st.grid, st.frac_pos, st.repeats, st.base_seed, st.p, st.n_test_each);
  std::vector<double> auc(series.size()), gap(series.size());
  detail::parallel_for(series.size(), st.threads ? st.threads : default_threads(), [&](Index k) {
    const auto& b = series[k].bundle;
    TrainConfig cfg = st.base;
    cfg.objective = ObjectiveKind::BaucOF;
    cfg.t = 0;
    cfg.hypothesis = SparsityHypothesis::full(b.train.dim());
    cfg.seed = derive_seed(st.base_seed, series[k].n, series[k].repeat);
    const Model m = psg_fit(b.train, cfg).model;
    const double test_auc = empirical_auc(score(m, b.test.features), b.test.labels);
    const double pos = static_cast<double>(std::count(b.unlabeled_truth.begin(), b.unlabeled_truth.end(), 1));
    const double pi_hat = pos / static_cast<double>(b.unlabeled_truth.size());
    auc[k] = test_auc;
    gap[k] = auc_from_bauc(empirical_bauc(m, b.train), pi_hat) - test_auc;
  });
  std::vector<Figure1Row> rows;
  for (Index g = 0; g < st.grid.size(); ++g) {
    std::vector<double> a(auc.begin() + static_cast<std::ptrdiff_t>(g * st.repeats),
                          auc.begin() + static_cast<std::ptrdiff_t>((g + 1) * st.repeats));
    std::vector<double> d(gap.begin() + static_cast<std::ptrdiff_t>(g * st.repeats),
                          gap.begin() + static_cast<std::ptrdiff_t>((g + 1) * st.repeats));
    Figure1Row row;
    row.n = st.grid[g];
    row.repeats = st.repeats;
    double lo, hi;
    detail::summarize(a, row.mean_auc, row.sd_auc, lo, hi);
    detail::summarize(d, row.mean_gap, row.sd_gap, lo, hi);
    rows.push_back(row);
  }
  return rows;
}

inline void write_figure1(const std::vector<Figure1Row>& rows, const std::string& path) {
  auto out = detail::open_out(path);
  out << "n,repeats,mean_auc,sd_auc,mean_gap,sd_gap\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.repeats << ',' << format_double(r.mean_auc) << ',' << format_double(r.sd_auc) << ','
        << format_double(r.mean_gap) << ',' << format_double(r.sd_gap) << '\n';
  }
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "spearman: need two equal-length samples of size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<Index> order(v.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (Index i = 0; i < order.size();) {
      Index j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (Index k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// ROC export
// ---------------------------------------------------------------------------

/// Writes "# auc=<value>" followed by threshold,fpr,tpr rows; the first row has threshold inf.
inline RocCurve emit_roc(const Model& model, const LabeledDataset& data, const std::string& path) {
  const Vector s = score(model, data.features);
  RocCurve roc = roc_curve(s, data.labels);
  auto out = detail::open_out(path);
  out << "# auc=" << format_double(roc.auc) << '\n';
  out << "threshold,fpr,tpr\n";
  for (Index k = 0; k < roc.thresholds.size(); ++k) {
    out << format_double(roc.thresholds[k]) << ',' << format_double(roc.fpr[k]) << ',' << format_double(roc.tpr[k])
        << '\n';
  }
  return roc;
}

}  // namespace pu
