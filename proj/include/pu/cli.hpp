#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pu/datagen.hpp"
#include "pu/experiments.hpp"
#include "pu/io.hpp"
#include "pu/metrics.hpp"
#include "pu/solver.hpp"

namespace pu {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Bad flag values discovered after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cli {

/// "a..b", "a..b:step" or "a,b,c".
inline std::vector<Index> parse_grid(const std::string& text) {
  auto num = [&](const std::string& s) -> Index {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-') throw UsageError("bad grid value '" + s + "' in '" + text + "'");
    return static_cast<Index>(v);
  };
  std::vector<Index> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    std::string rest = text.substr(dots + 2);
    Index step = 1;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      step = num(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    const Index lo = num(text.substr(0, dots)), hi = num(rest);
    if (step == 0 || lo > hi) throw UsageError("bad grid range '" + text + "'");
    for (Index v = lo; v <= hi; v += step) out.push_back(v);
  } else {
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, ',');) out.push_back(num(tok));
  }
  if (out.empty()) throw UsageError("empty grid '" + text + "'");
  return out;
}

/// "l0:S", "group:FILE:S" or "excl:FILE".
inline SparsityHypothesis parse_sparsity(const std::string& text, Index dim) {
  auto count = [&](const std::string& s) -> Index {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used == s.size() && s.front() != '-') return static_cast<Index>(v);
    } catch (const std::exception&) {
    }
    throw UsageError("--sparsity: '" + s + "' is not a nonnegative integer");
  };
  try {
    if (text.rfind("l0:", 0) == 0) return SparsityHypothesis::plain_l0(dim, count(text.substr(3)));
    if (text.rfind("group:", 0) == 0) {
      const auto body = text.substr(6);
      const auto colon = body.rfind(':');
      if (colon == std::string::npos) throw UsageError("--sparsity group needs FILE:S");
      GroupFile gf = read_group_file(body.substr(0, colon), dim);
      return SparsityHypothesis::group_l0(std::move(gf.groups), count(body.substr(colon + 1)));
    }
    if (text.rfind("excl:", 0) == 0) {
      GroupFile gf = read_group_file(text.substr(5), dim);
      if (!gf.budgets) throw UsageError("--sparsity excl: every line of the group file needs a 'budget:' prefix");
      return SparsityHypothesis::exclusive(std::move(gf.groups), std::move(*gf.budgets));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--sparsity: ") + e.what());
  }
  throw UsageError("--sparsity must be l0:S, group:FILE:S or excl:FILE (got '" + text + "')");
}

/// Training flags shared by train, tune and sweep.
struct TrainFlags {
  std::string objective = "bauc";
  std::string sparsity;
  Index t = 0;
  double alpha = 1e-3;
  double beta = 1e-3;
  std::optional<double> pi;
  double lr = 0.1;
  std::string lr_decay = "inverse_sqrt";
  Index epochs = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::string standardize = "off";
  Index eps_warmup = 0;
  double eps_step_scale = 0.0;

  void add_to(CLI::App* app, bool with_objective = true) {
    if (with_objective) {
      app->add_option("--objective", objective, "bauc or err")->check(CLI::IsMember({"bauc", "err"}))->capture_default_str();
      app->add_option("--pi", pi, "class prior of the unlabeled set (required for err)");
    }
    app->add_option("--sparsity", sparsity, "l0:S | group:FILE:S | excl:FILE");
    app->add_option("--t", t, "outlier budget")->capture_default_str();
    app->add_option("--alpha", alpha, "slack regularization")->capture_default_str();
    app->add_option("--beta", beta, "weight regularization")->capture_default_str();
    app->add_option("--lr", lr, "base learning rate")->capture_default_str();
    app->add_option("--lr-decay", lr_decay, "constant or inverse_sqrt")
        ->check(CLI::IsMember({"constant", "inverse_sqrt"}))
        ->capture_default_str();
    app->add_option("--epochs", epochs, "maximum epochs")->capture_default_str();
    app->add_option("--tol", tol, "relative objective change to stop at")->capture_default_str();
    app->add_option("--seed", seed, "shuffle seed")->capture_default_str();
    app->add_option("--standardize", standardize, "on or off")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
    app->add_option("--eps-warmup", eps_warmup, "epochs with both constraints lifted")->capture_default_str();
    app->add_option("--eps-step-scale", eps_step_scale, "slack step multiplier (0 = number of positives)")
        ->capture_default_str();
  }

  TrainConfig config(Index dim) const {
    TrainConfig c;
    c.objective = objective == "err" ? ObjectiveKind::ErrOF : ObjectiveKind::BaucOF;
    if (c.objective == ObjectiveKind::ErrOF && !pi) throw UsageError("--pi is required with --objective err");
    c.pi = pi;
    c.alpha = alpha;
    c.beta = beta;
    c.t = t;
    c.lr = lr;
    c.lr_decay = lr_decay == "constant" ? LrDecay::Constant : LrDecay::InverseSqrt;
    c.epochs = epochs;
    c.tol = tol;
    c.seed = seed;
    c.standardize = standardize == "on";
    c.eps_warmup_epochs = eps_warmup;
    c.eps_step_scale = eps_step_scale;
    if (!sparsity.empty()) c.hypothesis = parse_sparsity(sparsity, dim);
    return c;
  }
};

inline std::string sibling(const std::string& path, const std::string& suffix) {
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

inline void write_trace(const TrainTrace& trace, const std::string& path) {
  auto out = detail::open_out(path);
  out << "epoch,objective,train_bauc\n";
  for (Index e = 0; e < trace.objective.size(); ++e) {
    out << e + 1 << ',' << format_double(trace.objective[e]) << ',' << format_double(trace.train_bauc[e]) << '\n';
  }
}

inline void print_indices(std::ostream& out, const std::vector<Index>& idx) {
  for (Index i : idx) out << i + 1 << '\n';
}

}  // namespace cli

/// Command-line entry point. Returns 0 on success, 1 on usage errors, 2 on data errors and 3 on
/// numeric failures.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Positive-unlabeled learning with blind-AUC maximization, outlier slack and sparse weights"};
  app.require_subcommand(1, 1);

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic bundle (train.csv, test.csv, truth.json)");
  SyntheticSpec spec;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--p", spec.p, "number of features")->capture_default_str();
  synth->add_option("--s-true", spec.s_true, "relevant features")->capture_default_str();
  synth->add_option("--n-pos", spec.n_pos_labeled, "labeled positives, outliers included")->capture_default_str();
  synth->add_option("--n-unl", spec.n_unlabeled, "unlabeled samples")->capture_default_str();
  synth->add_option("--n-unl-pos", spec.n_unlabeled_pos, "positives hidden in the unlabeled set")->capture_default_str();
  synth->add_option("--outliers", spec.n_outliers, "corrupted labeled positives")->capture_default_str();
  synth->add_option("--n-test-pos", spec.n_test_pos)->capture_default_str();
  synth->add_option("--n-test-neg", spec.n_test_neg)->capture_default_str();
  synth->add_option("--seed", spec.seed)->capture_default_str();
  synth->add_flag("--permute-columns", spec.permute_columns, "scatter relevant features over random columns");
  synth->add_flag("--outliers-all-columns", spec.outliers_all_columns, "corrupt every column of outlier rows");

  // train
  auto* train = app.add_subcommand("train", "fit a model on a PU csv (label 1 = labeled positive, 0 = unlabeled)");
  std::string train_data, label_col = "label", train_out, trace_out;
  cli::TrainFlags train_flags;
  train->add_option("--data", train_data, "training csv")->required();
  train->add_option("--label-col", label_col, "label column name")->capture_default_str();
  train->add_option("--out", train_out, "model file to write")->required();
  train->add_option("--trace", trace_out, "trace csv (default: <out stem>_trace.csv)");
  train_flags.add_to(train);

  // eval
  auto* eval = app.add_subcommand("eval", "score a labeled csv (labels 1 / -1) and print the AUC");
  std::string eval_model, eval_data, roc_out;
  eval->add_option("--model", eval_model, "model file")->required();
  eval->add_option("--data", eval_data, "labeled csv")->required();
  eval->add_option("--label-col", label_col, "label column name")->capture_default_str();
  eval->add_option("--roc", roc_out, "write the ROC curve to this csv");

  // outliers
  auto* outl = app.add_subcommand("outliers", "print 1-based indices of positive rows flagged as outliers");
  std::string outl_model, outl_data;
  outl->add_option("--model", outl_model, "model file")->required();
  outl->add_option("--data", outl_data, "training csv, checked against the model's data fingerprint");
  outl->add_option("--label-col", label_col, "label column name")->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "synthetic sweep over features or outliers");
  std::string sweep_kind = "outliers", sweep_grid, sweep_methods = "BAUC,BAUC_O,BAUC_OF,ERR,ERR_O,ERR_OF", sweep_out;
  std::string tuning = "oracle";
  Index sweep_seeds = 10, threads = 0;
  ExperimentSettings st;
  sweep->add_option("--kind", sweep_kind, "features or outliers")
      ->check(CLI::IsMember({"features", "outliers"}))
      ->capture_default_str();
  sweep->add_option("--grid", sweep_grid, "grid values: a..b, a..b:step or a,b,c")->required();
  sweep->add_option("--methods", sweep_methods, "comma-separated method names")->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "replicates per grid value")->capture_default_str();
  sweep->add_option("--seed", st.base_seed, "base seed")->capture_default_str();
  sweep->add_option("--tuning", tuning, "oracle or greedy")->check(CLI::IsMember({"oracle", "greedy"}))->capture_default_str();
  sweep->add_option("--threads", threads, "worker threads (default: PU_THREADS or all cores)");
  sweep->add_option("--alpha", st.base.alpha)->capture_default_str();
  sweep->add_option("--beta", st.base.beta)->capture_default_str();
  sweep->add_option("--lr", st.base.lr)->capture_default_str();
  sweep->add_option("--epochs", st.base.epochs)->capture_default_str();
  sweep->add_option("--out", sweep_out, "report csv")->required();

  // figure1
  auto* fig = app.add_subcommand("figure1", "test AUC and estimate gap versus unlabeled-set size");
  Figure1Settings fs;
  std::string fig_out;
  fig->add_option("--out", fig_out, "output csv")->required();
  fig->add_option("--repeats", fs.repeats)->capture_default_str();
  fig->add_option("--seed", fs.base_seed)->capture_default_str();
  fig->add_option("--threads", fs.threads);

  // tune
  auto* tune = app.add_subcommand("tune", "greedy search over s and t, then fit and save the chosen model");
  std::string tune_data, tune_holdout, tune_out, t_grid_text = "0", s_grid_text;
  bool use_training = false;
  cli::TrainFlags tune_flags;
  tune->add_option("--data", tune_data, "training csv")->required();
  tune->add_option("--holdout", tune_holdout, "holdout PU csv used to score candidates");
  tune->add_option("--label-col", label_col, "label column name")->capture_default_str();
  tune->add_option("--t-grid", t_grid_text, "ascending outlier budgets")->capture_default_str();
  tune->add_option("--s-grid", s_grid_text, "ascending sparsity levels (default: p only)");
  tune->add_flag("--use-training-bauc", use_training, "score candidates on the training data");
  tune->add_option("--out", tune_out, "model file to write")->required();
  tune_flags.add_to(tune);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      export_bundle(generate(spec), synth_out);
      out << "wrote " << synth_out << "/train.csv, test.csv, truth.json\n";
    } else if (train->parsed()) {
      if (train_flags.objective == "err" && !train_flags.pi) throw UsageError("--pi is required with --objective err");
      const PUDataset data = load_pu_csv(train_data, label_col);
      const TrainConfig cfg = train_flags.config(data.dim());
      const FitResult fit = psg_fit(data, cfg);
      save_model(ModelFile{fit.model, cfg, fingerprint(data)}, train_out);
      const std::string tp = trace_out.empty() ? cli::sibling(train_out, "_trace.csv") : trace_out;
      cli::write_trace(fit.trace, tp);
      out << "epochs=" << fit.trace.epochs_run << " stop=" << to_string(fit.trace.stop)
          << " train_bauc=" << format_double(fit.trace.train_bauc.back()) << '\n';
    } else if (eval->parsed()) {
      const Model m = load_model(eval_model);
      const LabeledDataset data = load_labeled_csv(eval_data, label_col);
      const double auc = empirical_auc(score(m, data.features), data.labels);
      if (!roc_out.empty()) emit_roc(m, data, roc_out);
      out << "auc=" << format_double(auc) << '\n';
    } else if (outl->parsed()) {
      const ModelFile f = load_model_file(outl_model);
      if (!outl_data.empty()) {
        const PUDataset data = load_pu_csv(outl_data, label_col);
        if (f.data && !(*f.data == fingerprint(data))) {
          err << "warning: " << outl_data << " differs from the data the model was trained on\n";
        }
      }
      cli::print_indices(out, detect_outliers(f.model));
    } else if (sweep->parsed()) {
      std::vector<Method> methods;
      std::stringstream ss(sweep_methods);
      for (std::string tok; std::getline(ss, tok, ',');) {
        try {
          methods.push_back(parse_method(tok));
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      st.threads = threads;
      st.tuning = tuning == "greedy" ? Tuning::Greedy : Tuning::Oracle;
      const auto kind = sweep_kind == "features" ? SweepKind::Features : SweepKind::Outliers;
      const auto rep = run_table_sweep(kind, cli::parse_grid(sweep_grid), methods, sweep_seeds, st);
      write_report(rep, sweep_out);
      for (const auto& c : rep.cells) {
        out << c.grid_value << ' ' << to_string(c.method) << ' ' << format_double(100.0 * c.mean) << " +- "
            << format_double(100.0 * c.sd) << '\n';
      }
    } else if (fig->parsed()) {
      const auto rows = run_figure1(fs);
      write_figure1(rows, fig_out);
      for (const auto& r : rows) {
        out << r.n << ' ' << format_double(r.mean_auc) << ' ' << format_double(r.mean_gap) << '\n';
      }
    } else if (tune->parsed()) {
      if (tune_flags.objective == "err" && !tune_flags.pi) throw UsageError("--pi is required with --objective err");
      if (tune_holdout.empty() && !use_training) throw UsageError("tune needs --holdout or --use-training-bauc");
      const PUDataset data = load_pu_csv(tune_data, label_col);
      const PUDataset holdout = tune_holdout.empty() ? data : load_pu_csv(tune_holdout, label_col);
      const TrainConfig base = tune_flags.config(data.dim());
      const auto t_grid = cli::parse_grid(t_grid_text);
      const auto s_grid = s_grid_text.empty() ? std::vector<Index>{data.dim()} : cli::parse_grid(s_grid_text);
      const TuneResult res = greedy_tune(data, holdout, base, t_grid, s_grid, TuneOptions{use_training, 1e-3});
      for (const auto& w : res.warnings) err << "warning: " << w << '\n';
      for (const auto& h : res.history) {
        out << "s=" << h.s << " t=" << h.t << " bauc=" << format_double(h.bauc) << (h.accepted ? " accepted" : "")
            << '\n';
      }
      const FitResult fit = psg_fit(data, res.config);
      save_model(ModelFile{fit.model, res.config, fingerprint(data)}, tune_out);
      out << "chosen t=" << res.config.t << " hypothesis=" << fit.model.hypothesis.describe() << '\n';
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace pu
