#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pu/experiments.hpp"

namespace fs = std::filesystem;
using pu::Index;
using pu::Method;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pu_exp_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

pu::ExperimentSettings quick() {
  pu::ExperimentSettings st;
  st.base.epochs = 8;
  st.spec.n_test_pos = 200;
  st.spec.n_test_neg = 300;
  return st;
}

}  // namespace

TEST(TableSweep, SingleCell) {
  const auto rep = pu::run_table_sweep(pu::SweepKind::Features, {40}, {Method::BAUC}, 1, quick());
  ASSERT_EQ(rep.cells.size(), 1u);
  ASSERT_EQ(rep.fits.size(), 1u);
  EXPECT_EQ(rep.cells[0].mean, rep.fits[0].auc);
  EXPECT_EQ(rep.cells[0].sd, 0.0);
  EXPECT_EQ(rep.fits[0].t, 0u);
  EXPECT_EQ(rep.fits[0].s, 40u);
}

TEST(TableSweep, MethodsConfigureBudgets) {
  const auto rep = pu::run_table_sweep(pu::SweepKind::Outliers, {3},
                                       {Method::BAUC, Method::BAUC_O, Method::BAUC_OF, Method::ERR_OF}, 2, quick());
  ASSERT_EQ(rep.cells.size(), 4u);
  for (const auto& f : rep.fits) {
    EXPECT_EQ(f.t, pu::uses_outliers(f.method) ? 3u : 0u);
    EXPECT_EQ(f.s, pu::uses_features(f.method) ? 40u : 200u);
    EXPECT_LE(f.outliers.size(), f.t);
    EXPECT_LE(f.support.size(), f.s);
  }
  for (const auto& c : rep.cells) {
    EXPECT_EQ(c.seeds, 2u);
    EXPECT_GE(c.mean, c.min);
    EXPECT_LE(c.mean, c.max);
    EXPECT_GE(c.sd, 0.0);
  }
}

TEST(TableSweep, ThreadCountDoesNotChangeResultsAndCsvIsStable) {
  auto st = quick();
  st.threads = 1;
  const auto a = pu::run_table_sweep(pu::SweepKind::Outliers, {1, 2}, {Method::BAUC, Method::BAUC_O}, 2, st);
  st.threads = 3;
  const auto b = pu::run_table_sweep(pu::SweepKind::Outliers, {1, 2}, {Method::BAUC, Method::BAUC_O}, 2, st);
  const auto pa = scratch("a.csv"), pb = scratch("b.csv");
  pu::write_report(a, pa.string());
  pu::write_report(b, pb.string());
  EXPECT_EQ(slurp(pa), slurp(pb));
  EXPECT_EQ(slurp(scratch("a_fits.csv")), slurp(scratch("b_fits.csv")));
  EXPECT_TRUE(fs::exists(scratch("a_timing.csv")));
}

TEST(TableSweep, GreedyTuningRuns) {
  auto st = quick();
  st.tuning = pu::Tuning::Greedy;
  st.t_grid = {1, 2};
  st.s_grid = {20, 40};
  const auto rep = pu::run_table_sweep(pu::SweepKind::Features, {40}, {Method::BAUC_OF}, 1, st);
  ASSERT_EQ(rep.fits.size(), 1u);
  EXPECT_TRUE(rep.fits[0].t == 1 || rep.fits[0].t == 2);
}

TEST(TableSweep, RejectsEmptyInputs) {
  EXPECT_THROW(pu::run_table_sweep(pu::SweepKind::Features, {}, {Method::BAUC}, 1, quick()), std::invalid_argument);
  EXPECT_THROW(pu::run_table_sweep(pu::SweepKind::Features, {40}, {}, 1, quick()), std::invalid_argument);
}

TEST(TableSweep, ErrorsNameTheFailingFit) {
  auto st = quick();
  st.base.lr = -1.0;
  try {
    pu::run_table_sweep(pu::SweepKind::Features, {40}, {Method::BAUC}, 1, st);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("grid value 40"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("BAUC"), std::string::npos);
  }
}

TEST(Methods, ParseNames) {
  EXPECT_EQ(pu::parse_method("BAUC-OF"), Method::BAUC_OF);
  EXPECT_EQ(pu::parse_method("ERR_O"), Method::ERR_O);
  EXPECT_THROW(pu::parse_method("SVM"), std::invalid_argument);
}

TEST(Figure1, OneRowPerGridValue) {
  pu::Figure1Settings fs1;
  fs1.grid = {10, 20, 30};
  fs1.repeats = 3;
  fs1.n_test_each = 100;
  fs1.base.epochs = 5;
  const auto rows = pu::run_figure1(fs1);
  ASSERT_EQ(rows.size(), 3u);
  for (Index k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].n, fs1.grid[k]);
    EXPECT_EQ(rows[k].repeats, 3u);
    EXPECT_GE(rows[k].sd_auc, 0.0);
  }
  const auto p = scratch("fig.csv");
  pu::write_figure1(rows, p.string());
  EXPECT_EQ(slurp(p).substr(0, 40), std::string("n,repeats,mean_auc,sd_auc,mean_gap,sd_gap\n").substr(0, 40));
}

TEST(Spearman, Basics) {
  EXPECT_NEAR(pu::spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-15);
  EXPECT_NEAR(pu::spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(pu::spearman({1, 2, 3}, {1, 1, 2}), std::sqrt(0.75), 1e-12);
}

namespace {

struct RocRow {
  double thr, fpr, tpr;
};

std::pair<double, std::vector<RocRow>> read_roc(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  const double auc = std::stod(line.substr(line.find('=') + 1));
  std::getline(in, line);
  std::vector<RocRow> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    rows.push_back({std::stod(a), std::stod(b), std::stod(c)});
  }
  return {auc, rows};
}

pu::Model weights(pu::Vector w) {
  pu::Model m;
  m.hypothesis = pu::SparsityHypothesis::full(static_cast<Index>(w.size()));
  m.w = std::move(w);
  return m;
}

}  // namespace

TEST(EmitRoc, PerfectModelEndpoints) {
  pu::Matrix x(4, 1);
  x << 2, 1, -1, -2;
  const pu::LabeledDataset d(x, {1, 1, -1, -1});
  const auto p = scratch("roc.csv");
  pu::emit_roc(weights(pu::Vector::Ones(1)), d, p.string());
  const auto [auc, rows] = read_roc(p);
  EXPECT_EQ(auc, 1.0);
  EXPECT_EQ(rows.front().fpr, 0.0);
  EXPECT_EQ(rows.front().tpr, 0.0);
  EXPECT_EQ(rows.back().fpr, 1.0);
  EXPECT_EQ(rows.back().tpr, 1.0);
}

TEST(EmitRoc, ConstantScoresTwoPoints) {
  pu::Matrix x(4, 1);
  x << 2, 1, -1, -2;
  const pu::LabeledDataset d(x, {1, -1, 1, -1});
  const auto p = scratch("roc0.csv");
  pu::emit_roc(weights(pu::Vector::Zero(1)), d, p.string());
  const auto [auc, rows] = read_roc(p);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(auc, 0.5);
}

TEST(EmitRoc, ReintegrationMatchesHeader) {
  pu::SyntheticSpec spec;
  spec.p = 10;
  spec.s_true = 10;
  spec.n_test_pos = 300;
  spec.n_test_neg = 500;
  const auto b = pu::generate(spec);
  const auto p = scratch("roc_r.csv");
  pu::emit_roc(weights(pu::Vector::Ones(10)), b.test, p.string());
  const auto [auc, rows] = read_roc(p);
  double trap = 0.0;
  for (Index k = 1; k < rows.size(); ++k) {
    EXPECT_GE(rows[k].fpr, rows[k - 1].fpr);
    trap += 0.5 * (rows[k].fpr - rows[k - 1].fpr) * (rows[k].tpr + rows[k - 1].tpr);
  }
  EXPECT_NEAR(trap, auc, 1e-9);
}

TEST(EmitRoc, SingleClassThrows) {
  pu::Matrix x(2, 1);
  x << 1, 2;
  const pu::LabeledDataset d(x, {1, 1});
  EXPECT_THROW(pu::emit_roc(weights(pu::Vector::Ones(1)), d, scratch("x.csv").string()), std::invalid_argument);
}
