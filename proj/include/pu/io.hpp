#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pu/datagen.hpp"
#include "pu/model.hpp"
#include "pu/solver.hpp"
#include "pu/types.hpp"

namespace pu {

// ---------------------------------------------------------------------------
// Number formatting and parsing
// ---------------------------------------------------------------------------

/// Shortest decimal string that parses back to exactly `x`.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  s = unquote(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV datasets
// ---------------------------------------------------------------------------

enum class CsvMode { PU, Labeled };

struct CsvTable {
  std::vector<std::string> feature_names;
  Matrix features;
  /// Raw label values in file order.
  std::vector<int> labels;
};

/// Header row required. Every column except `label_column` becomes a feature. Empty lines are skipped;
/// line numbers in errors count the header as line 1.
inline CsvTable read_csv(const std::string& path, const std::string& label_column) {
  const auto lines = detail::read_lines(path);
  Index header_line = 0;
  while (header_line < lines.size() && detail::trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) throw DataError(path + ": missing header row");
  const auto header = detail::split_commas(lines[header_line]);

  CsvTable table;
  std::optional<Index> label_idx;
  for (Index c = 0; c < header.size(); ++c) {
    const std::string name(detail::unquote(header[c]));
    if (name == label_column) {
      if (label_idx) throw DataError(path + ": label column '" + label_column + "' appears twice");
      label_idx = c;
    } else {
      table.feature_names.push_back(name);
    }
  }
  if (!label_idx) throw DataError(path + ": no column named '" + label_column + "' in header");

  std::vector<double> values;
  Index rows = 0;
  for (Index ln = header_line + 1; ln < lines.size(); ++ln) {
    if (detail::trim(lines[ln]).empty()) continue;
    const auto cells = detail::split_commas(lines[ln]);
    const std::string where = path + ": line " + std::to_string(ln + 1);
    if (cells.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    for (Index c = 0; c < cells.size(); ++c) {
      const auto v = detail::parse_double(cells[c]);
      const std::string col(detail::unquote(header[c]));
      if (!v || !std::isfinite(*v)) {
        throw DataError(where + ", column '" + col + "': not a finite number: '" +
                        std::string(detail::trim(cells[c])) + "'");
      }
      if (c == *label_idx) {
        if (*v != std::floor(*v) || std::abs(*v) > 1e9) {
          throw DataError(where + ", column '" + col + "': label must be an integer");
        }
        table.labels.push_back(static_cast<int>(*v));
      } else {
        values.push_back(*v);
      }
    }
    ++rows;
  }
  const auto p = static_cast<Eigen::Index>(table.feature_names.size());
  table.features = Matrix(static_cast<Eigen::Index>(rows), p);
  for (Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) table.features(static_cast<Eigen::Index>(r), c) = values[r * p + c];
  }
  return table;
}

/// PU mode: label 1 marks a labeled positive, 0 an unlabeled row. Row order is preserved within each part.
inline PUDataset load_pu_csv(const std::string& path, const std::string& label_column) {
  CsvTable t = read_csv(path, label_column);
  std::vector<Eigen::Index> pos, unl;
  for (Index r = 0; r < t.labels.size(); ++r) {
    if (t.labels[r] == 1) {
      pos.push_back(static_cast<Eigen::Index>(r));
    } else if (t.labels[r] == 0) {
      unl.push_back(static_cast<Eigen::Index>(r));
    } else {
      throw DataError(path + ": data row " + std::to_string(r + 1) + " has label " + std::to_string(t.labels[r]) +
                      "; PU files use 1 (labeled positive) or 0 (unlabeled)");
    }
  }
  if (pos.empty()) throw DataError(path + ": no labeled positive rows (label 1)");
  if (unl.empty()) throw DataError(path + ": no unlabeled rows (label 0)");
  return PUDataset(t.features(pos, Eigen::all), t.features(unl, Eigen::all), std::move(t.feature_names));
}

/// Labeled mode: labels +1 / -1.
inline LabeledDataset load_labeled_csv(const std::string& path, const std::string& label_column) {
  CsvTable t = read_csv(path, label_column);
  for (Index r = 0; r < t.labels.size(); ++r) {
    if (t.labels[r] != 1 && t.labels[r] != -1) {
      throw DataError(path + ": data row " + std::to_string(r + 1) + " has label " + std::to_string(t.labels[r]) +
                      "; labeled files use 1 or -1");
    }
  }
  return LabeledDataset(std::move(t.features), std::move(t.labels));
}

inline std::variant<PUDataset, LabeledDataset> load_csv(const std::string& path, const std::string& label_column,
                                                        CsvMode mode) {
  if (mode == CsvMode::PU) return load_pu_csv(path, label_column);
  return load_labeled_csv(path, label_column);
}

namespace detail {

inline std::vector<std::string> default_names(Index p, const std::vector<std::string>& names) {
  if (!names.empty()) return names;
  std::vector<std::string> out(p);
  for (Index j = 0; j < p; ++j) out[j] = "x" + std::to_string(j + 1);
  return out;
}

inline void write_rows(std::ostream& out, const Matrix& x, int label) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) out << format_double(x(r, c)) << ',';
    out << label << '\n';
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

inline void write_header(std::ostream& out, const std::vector<std::string>& names, const std::string& label) {
  for (const auto& n : names) out << n << ',';
  out << label << '\n';
}

}  // namespace detail

/// Positives (label 1) first, then unlabeled rows (label 0).
inline void write_pu_csv(const std::string& path, const PUDataset& data, const std::string& label_column = "label") {
  auto out = detail::open_out(path);
  detail::write_header(out, detail::default_names(data.dim(), data.feature_names), label_column);
  detail::write_rows(out, data.positives, 1);
  detail::write_rows(out, data.unlabeled, 0);
}

inline void write_labeled_csv(const std::string& path, const LabeledDataset& data,
                              const std::string& label_column = "label") {
  auto out = detail::open_out(path);
  detail::write_header(out, detail::default_names(data.dim(), {}), label_column);
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) out << format_double(data.features(r, c)) << ',';
    out << data.labels[static_cast<Index>(r)] << '\n';
  }
}

/// Writes train.csv, test.csv and truth.json into `dir` (created if needed).
inline void export_bundle(const SyntheticBundle& bundle, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  write_pu_csv((d / "train.csv").string(), bundle.train);
  write_labeled_csv((d / "test.csv").string(), bundle.test);
  nlohmann::json truth;
  truth["true_support"] = bundle.true_support;
  truth["outlier_rows"] = bundle.outlier_indices;
  truth["unlabeled_truth"] = bundle.unlabeled_truth;
  truth["index_base"] = 0;
  auto out = detail::open_out((d / "truth.json").string());
  out << truth.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

inline constexpr int kModelSchemaVersion = 1;

struct DataFingerprint {
  Index n_pos = 0;
  Index n_unl = 0;
  Index p = 0;
  /// FNV-1a over the raw bytes of both matrices, positives first.
  std::uint64_t hash = 0;

  bool operator==(const DataFingerprint&) const = default;
};

inline DataFingerprint fingerprint(const PUDataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const Matrix& m) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(data.positives);
  feed(data.unlabeled);
  return {data.n_pos(), data.n_unl(), data.dim(), h};
}

inline std::string format_hash(std::uint64_t h) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + sizeof(buf), h, 16);
  return std::string(buf, res.ptr);
}

struct ModelFile {
  Model model;
  std::optional<TrainConfig> config;
  std::optional<DataFingerprint> data;
};

namespace detail {

using nlohmann::json;

inline json sparse_pairs(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) arr.push_back(json::array({i, v[i]}));
  }
  return arr;
}

inline Vector dense_from_pairs(const json& arr, Index n, const char* what) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  for (const auto& e : arr) {
    const auto i = e.at(0).get<Index>();
    if (i >= n) throw DataError(std::string("model file: ") + what + " index " + std::to_string(i) + " out of range");
    v[static_cast<Eigen::Index>(i)] = e.at(1).get<double>();
  }
  return v;
}

inline json hypothesis_json(const SparsityHypothesis& h) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PlainL0>) {
          return {{"kind", "l0"}, {"dim", c.dim}, {"s", c.s}};
        } else if constexpr (std::is_same_v<T, GroupL0>) {
          return {{"kind", "group"}, {"groups", c.groups.groups()}, {"s", c.s}};
        } else {
          return {{"kind", "exclusive"}, {"groups", c.groups.groups()}, {"s", c.s_vec}};
        }
      },
      h.variant());
}

inline SparsityHypothesis hypothesis_from_json(const json& j, Index dim) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "l0") return SparsityHypothesis::plain_l0(j.at("dim").get<Index>(), j.at("s").get<Index>());
  GroupPartition groups(j.at("groups").get<std::vector<std::vector<Index>>>(), dim);
  if (kind == "group") return SparsityHypothesis::group_l0(std::move(groups), j.at("s").get<Index>());
  if (kind == "exclusive") return SparsityHypothesis::exclusive(std::move(groups), j.at("s").get<std::vector<Index>>());
  throw DataError("model file: unknown hypothesis kind '" + kind + "'");
}

inline json config_json(const TrainConfig& c) {
  json j = {{"objective", to_string(c.objective)},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"t", c.t},
            {"lr", c.lr},
            {"lr_decay", c.lr_decay == LrDecay::Constant ? "constant" : "inverse_sqrt"},
            {"epochs", c.epochs},
            {"tol", c.tol},
            {"seed", c.seed},
            {"standardize", c.standardize},
            {"eps_step_scale", c.eps_step_scale},
            {"eps_warmup_epochs", c.eps_warmup_epochs}};
  j["pi"] = c.pi ? json(*c.pi) : json(nullptr);
  j["hypothesis"] = c.hypothesis ? json(c.hypothesis->describe()) : json(nullptr);
  return j;
}

inline TrainConfig config_from_json(const json& j, const std::optional<SparsityHypothesis>& h) {
  TrainConfig c;
  c.objective = j.at("objective").get<std::string>() == "err" ? ObjectiveKind::ErrOF : ObjectiveKind::BaucOF;
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  if (!j.at("pi").is_null()) c.pi = j.at("pi").get<double>();
  c.t = j.at("t").get<Index>();
  c.lr = j.at("lr").get<double>();
  c.lr_decay = j.at("lr_decay").get<std::string>() == "constant" ? LrDecay::Constant : LrDecay::InverseSqrt;
  c.epochs = j.at("epochs").get<Index>();
  c.tol = j.at("tol").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.standardize = j.at("standardize").get<bool>();
  c.eps_step_scale = j.at("eps_step_scale").get<double>();
  c.eps_warmup_epochs = j.at("eps_warmup_epochs").get<Index>();
  if (!j.at("hypothesis").is_null()) c.hypothesis = h;
  return c;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline void save_model(const ModelFile& file, const std::string& path) {
  using nlohmann::json;
  const Model& m = file.model;
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["objective"] = to_string(m.objective);
  j["dim"] = m.dim();
  j["n_pos"] = static_cast<Index>(m.eps.size());
  j["hypothesis"] = detail::hypothesis_json(m.hypothesis);
  j["w"] = detail::sparse_pairs(m.w);
  j["eps"] = detail::sparse_pairs(m.eps);
  j["b"] = m.b ? json(*m.b) : json(nullptr);
  if (m.standardizer) {
    j["standardizer"] = {{"mean", detail::to_std(m.standardizer->mean)}, {"scale", detail::to_std(m.standardizer->scale)}};
  } else {
    j["standardizer"] = nullptr;
  }
  j["config"] = file.config ? detail::config_json(*file.config) : json(nullptr);
  if (file.data) {
    j["data"] = {{"n_pos", file.data->n_pos},
                 {"n_unl", file.data->n_unl},
                 {"p", file.data->p},
                 {"hash", format_hash(file.data->hash)}};
  } else {
    j["data"] = nullptr;
  }
  auto out = detail::open_out(path);
  out << j.dump(1) << '\n';
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline void save_model(const Model& model, const std::string& path) { save_model(ModelFile{model, {}, {}}, path); }

inline ModelFile load_model_file(const std::string& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("model file '" + path + "': parse error: " + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    if (version > kModelSchemaVersion) {
      throw DataError("model file '" + path + "' has schema version " + std::to_string(version) +
                      "; this build reads up to " + std::to_string(kModelSchemaVersion));
    }
    ModelFile f;
    Model& m = f.model;
    const auto dim = j.at("dim").get<Index>();
    const auto n_pos = j.at("n_pos").get<Index>();
    m.objective = j.at("objective").get<std::string>() == "err" ? ObjectiveKind::ErrOF : ObjectiveKind::BaucOF;
    m.hypothesis = detail::hypothesis_from_json(j.at("hypothesis"), dim);
    m.w = detail::dense_from_pairs(j.at("w"), dim, "w");
    m.eps = detail::dense_from_pairs(j.at("eps"), n_pos, "eps");
    if (!j.at("b").is_null()) m.b = j.at("b").get<double>();
    if (const auto& st = j.at("standardizer"); !st.is_null()) {
      Standardizer s{detail::from_std(st.at("mean").get<std::vector<double>>()),
                     detail::from_std(st.at("scale").get<std::vector<double>>())};
      if (static_cast<Index>(s.mean.size()) != dim || static_cast<Index>(s.scale.size()) != dim) {
        throw DataError("model file '" + path + "': standardizer length does not match dim");
      }
      m.standardizer = std::move(s);
    }
    if (const auto& c = j.at("config"); !c.is_null()) f.config = detail::config_from_json(c, m.hypothesis);
    if (const auto& d = j.at("data"); !d.is_null()) {
      f.data = DataFingerprint{d.at("n_pos").get<Index>(), d.at("n_unl").get<Index>(), d.at("p").get<Index>(),
                               std::stoull(d.at("hash").get<std::string>(), nullptr, 16)};
    }
    return f;
  } catch (const json::exception& e) {
    throw DataError("model file '" + path + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError("model file '" + path + "': " + e.what());
  }
}

inline Model load_model(const std::string& path) { return load_model_file(path).model; }

// ---------------------------------------------------------------------------
// Group files
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<Index> parse_index_list(std::string_view s, const std::string& where) {
  std::vector<Index> out;
  for (auto cell : split_commas(s)) {
    cell = trim(cell);
    Index v = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || v == 0) {
      throw DataError(where + ": expected a 1-based feature index, got '" + std::string(cell) + "'");
    }
    out.push_back(v - 1);
  }
  return out;
}

}  // namespace detail

struct GroupFile {
  GroupPartition groups;
  /// Per-group budgets; present only when every line carried a "budget:" prefix.
  std::optional<std::vector<Index>> budgets;
};

/// One group per line as comma-separated 1-based feature indices, optionally prefixed with
/// "budget:" (used by the exclusive hypothesis). Blank lines and lines starting with '#' are skipped.
inline GroupFile read_group_file(const std::string& path, Index dim) {
  const auto lines = detail::read_lines(path);
  std::vector<std::vector<Index>> groups;
  std::vector<Index> budgets;
  Index with_budget = 0;
  for (Index ln = 0; ln < lines.size(); ++ln) {
    std::string_view line = detail::trim(lines[ln]);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = path + ": line " + std::to_string(ln + 1);
    if (const auto colon = line.find(':'); colon != std::string_view::npos) {
      const auto head = detail::trim(line.substr(0, colon));
      Index b = 0;
      const auto res = std::from_chars(head.data(), head.data() + head.size(), b);
      if (head.empty() || res.ec != std::errc() || res.ptr != head.data() + head.size()) {
        throw DataError(where + ": budget '" + std::string(head) + "' is not a nonnegative integer");
      }
      budgets.push_back(b);
      ++with_budget;
      line = line.substr(colon + 1);
    }
    groups.push_back(detail::parse_index_list(line, where));
  }
  if (groups.empty()) throw DataError(path + ": no groups");
  if (with_budget != 0 && with_budget != groups.size()) {
    throw DataError(path + ": either every group line or none must carry a budget prefix");
  }
  GroupFile out;
  try {
    out.groups = GroupPartition(std::move(groups), dim);
  } catch (const std::invalid_argument& e) {
    throw DataError(path + ": " + e.what());
  }
  if (with_budget != 0) out.budgets = std::move(budgets);
  return out;
}

}  // namespace pu
