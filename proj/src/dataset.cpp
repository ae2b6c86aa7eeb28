#include "pcov/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <set>

#include "pcov/error.hpp"
#include "pcov/random.hpp"

namespace pcov {

std::string format_double(double value) {
  if (value == 0.0) return std::signbit(value) ? "-0" : "0";
  std::array<char, 64> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Comma-separated cells; a cell wrapped in double quotes may contain commas,
// and "" inside it stands for one quote.
std::vector<std::string> split_cells(std::string_view line, const std::string& where) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    std::size_t end = line.find(',', pos);
    std::string_view raw = trim(line.substr(pos, end == std::string_view::npos ? end : end - pos));
    if (!raw.empty() && raw.front() == '"') {
      // Re-scan from the opening quote, skipping commas inside the quotes.
      std::size_t q = line.find('"', pos) + 1;
      std::string cell;
      while (true) {
        if (q >= line.size()) throw InputError(where + ": unterminated quoted cell");
        if (line[q] == '"') {
          if (q + 1 < line.size() && line[q + 1] == '"') {
            cell += '"';
            q += 2;
            continue;
          }
          break;
        }
        cell += line[q++];
      }
      end = line.find(',', q + 1);
      if (!trim(line.substr(q + 1, end == std::string_view::npos ? end : end - q - 1)).empty()) {
        throw InputError(where + ": text after a closing quote");
      }
      cells.push_back(std::move(cell));
    } else {
      cells.emplace_back(raw);
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return cells;
}

std::string quote_if_needed(const std::string& name) {
  const bool plain = name.find_first_of(",\"") == std::string::npos && name == trim(name) &&
                     name.front() != '#';
  if (plain) return name;
  std::string out = "\"";
  for (char c : name) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

Eigen::Index Table::column_index(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InputError("column '" + name + "' not found");
  return static_cast<Eigen::Index>(it - columns.begin());
}

Table parse_csv(std::istream& in, const std::string& source) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<double> cells;
  Eigen::Index n_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      std::string_view comment = view.substr(1);
      if (!comment.empty() && comment.front() == ' ') comment.remove_prefix(1);
      table.comments.emplace_back(comment);
      continue;
    }
    const auto parts = split_cells(view, source + ":" + std::to_string(line_no));
    if (!have_header) {
      std::set<std::string> seen;
      for (const auto& p : parts) {
        if (p.empty()) throw InputError(source + ":" + std::to_string(line_no) + ": empty column name");
        if (!seen.emplace(p).second) {
          throw InputError(source + ":" + std::to_string(line_no) + ": duplicate column '" +
                           std::string(p) + "'");
        }
        table.columns.emplace_back(p);
      }
      have_header = true;
      continue;
    }
    if (parts.size() != table.columns.size()) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.columns.size()) + " cells, found " +
                       std::to_string(parts.size()));
    }
    for (std::size_t j = 0; j < parts.size(); ++j) {
      const auto v = parse_double(parts[j]);
      if (!v || !std::isfinite(*v)) {
        throw InputError(source + ":" + std::to_string(line_no) + ": column '" +
                         table.columns[j] + "' has non-numeric value '" + std::string(parts[j]) +
                         "'");
      }
      cells.push_back(*v);
    }
    ++n_rows;
  }
  if (!have_header) throw InputError(source + ": no header row");
  if (n_rows == 0) throw InputError(source + ": no data rows");
  const auto n_cols = static_cast<Eigen::Index>(table.columns.size());
  table.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(cells.data(), n_rows, n_cols);
  return table;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return parse_csv(in, path.string());
}

void write_csv(std::ostream& out, const Table& table) {
  for (const auto& c : table.comments) out << "# " << c << '\n';
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    out << (j ? "," : "") << quote_if_needed(table.columns[j]);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      out << (j ? "," : "") << format_double(table.values(i, j));
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_csv(out, table);
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

LabelData labels_from_table(const Table& table, const std::vector<std::string>& columns) {
  if (columns.empty()) throw InputError("at least one label column is required");
  LabelMatrix labels(table.values.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t l = 0; l < columns.size(); ++l) {
    const Eigen::Index j = table.column_index(columns[l]);
    for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
      const double v = table.values(i, j);
      if (v != std::floor(v) || v < 0.0 || v > 1e6) {
        throw InputError("label column '" + columns[l] + "' row " + std::to_string(i + 1) +
                         ": '" + format_double(v) + "' is not a nonnegative integer class");
      }
      labels(i, static_cast<Eigen::Index>(l)) = static_cast<int>(v);
    }
  }
  return LabelData::multi(labels);
}

Dataset dataset_from_table(const Table& table, const std::vector<std::string>& label_columns,
                           std::vector<std::string> feature_columns) {
  for (const auto& l : label_columns) {
    if (std::find(feature_columns.begin(), feature_columns.end(), l) != feature_columns.end()) {
      throw InputError("column '" + l + "' is listed as both feature and label");
    }
  }
  if (feature_columns.empty()) {
    for (const auto& c : table.columns) {
      if (std::find(label_columns.begin(), label_columns.end(), c) == label_columns.end()) {
        feature_columns.push_back(c);
      }
    }
  }
  if (feature_columns.empty()) throw InputError("no feature columns");
  Dataset ds;
  ds.feature_names = feature_columns;
  ds.label_names = label_columns;
  ds.features.resize(table.values.rows(), static_cast<Eigen::Index>(feature_columns.size()));
  for (std::size_t j = 0; j < feature_columns.size(); ++j) {
    ds.features.col(static_cast<Eigen::Index>(j)) =
        table.values.col(table.column_index(feature_columns[j]));
  }
  ds.labels = labels_from_table(table, label_columns);
  return ds;
}

namespace {

constexpr double kIris[150][5] = {
#include "iris_data.inc"
};

}  // namespace

Table iris_table() {
  Table t;
  t.comments = {"iris: 150 samples, 4 measurements (cm), species 0=setosa 1=versicolor 2=virginica"};
  t.columns = {"sepal_length", "sepal_width", "petal_length", "petal_width", "species"};
  t.values.resize(150, 5);
  for (int i = 0; i < 150; ++i) {
    for (int j = 0; j < 5; ++j) t.values(i, j) = kIris[i][j];
  }
  return t;
}

Dataset load_iris() { return dataset_from_table(iris_table(), {"species"}); }

// ---------------------------------------------------------------------------
// Splits

namespace {

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw InputError("test fraction must lie in (0, 1)");
}

}  // namespace

Split stratified_split(const LabelData& y, double test_fraction, std::uint64_t seed) {
  check_fraction(test_fraction);
  if (y.n_samples() == 0) throw InputError("cannot split an empty dataset");
  Rng rng(seed);
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < y.n_samples(); ++i) by_class[y.labels(i, 0)].push_back(i);
  Split split;
  for (auto& [cls, idx] : by_class) {
    rng.shuffle(idx);
    const auto n_test = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(idx.size())));
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  if (split.train.empty() || split.test.empty()) {
    throw InputError("split leaves an empty train or test set");
  }
  return split;
}

Split random_split(Eigen::Index n, double test_fraction, std::uint64_t seed) {
  check_fraction(test_fraction);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(idx);
  const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(n)));
  Split split;
  split.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  if (split.train.empty() || split.test.empty()) {
    throw InputError("split leaves an empty train or test set");
  }
  return split;
}

Split explicit_split(Eigen::Index n, const std::vector<Eigen::Index>& test) {
  std::vector<bool> is_test(static_cast<std::size_t>(n), false);
  for (Eigen::Index i : test) {
    if (i < 0 || i >= n) throw InputError("test index " + std::to_string(i) + " out of range");
    if (is_test[static_cast<std::size_t>(i)]) {
      throw InputError("test index " + std::to_string(i) + " listed twice");
    }
    is_test[static_cast<std::size_t>(i)] = true;
  }
  Split split;
  for (Eigen::Index i = 0; i < n; ++i) {
    (is_test[static_cast<std::size_t>(i)] ? split.test : split.train).push_back(i);
  }
  if (split.train.empty()) throw InputError("explicit split leaves no training rows");
  return split;
}

Matrix select_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

std::vector<std::string> feature_columns(int f) {
  std::vector<std::string> cols;
  for (int j = 1; j <= f; ++j) cols.push_back("x" + std::to_string(j));
  cols.emplace_back("label");
  return cols;
}

/// Rows shuffled with the generator's own stream so labels are interleaved.
void shuffle_rows(Matrix& m, Rng& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  rng.shuffle(order);
  m = select_rows(m, order);
}

std::string kv(const char* key, double v) { return std::string(key) + "=" + format_double(v); }

}  // namespace

Table make_blobs(const BlobsParams& p, std::uint64_t seed) {
  if (p.n_samples < 1 || p.n_centers < 1 || p.n_features < 1) {
    throw InputError("blobs: n_samples, n_centers and n_features must be positive");
  }
  if (p.n_centers > p.n_samples) throw InputError("blobs: more centers than samples");
  if (!(p.cluster_std >= 0.0) || !(p.center_box > 0.0)) {
    throw InputError("blobs: cluster_std must be nonnegative and center_box positive");
  }
  Rng rng(seed);
  Matrix centers(p.n_centers, p.n_features);
  for (int c = 0; c < p.n_centers; ++c) {
    for (int j = 0; j < p.n_features; ++j) centers(c, j) = rng.uniform(-p.center_box, p.center_box);
  }
  Matrix data(p.n_samples, p.n_features + 1);
  int row = 0;
  for (int c = 0; c < p.n_centers; ++c) {
    const int count = p.n_samples / p.n_centers + (c < p.n_samples % p.n_centers ? 1 : 0);
    for (int k = 0; k < count; ++k, ++row) {
      for (int j = 0; j < p.n_features; ++j) data(row, j) = rng.normal(centers(c, j), p.cluster_std);
      data(row, p.n_features) = c;
    }
  }
  shuffle_rows(data, rng);
  Table t;
  t.comments = {"generator=blobs seed=" + std::to_string(seed),
                "n_samples=" + std::to_string(p.n_samples) + " n_centers=" +
                    std::to_string(p.n_centers) + " n_features=" + std::to_string(p.n_features) +
                    " " + kv("cluster_std", p.cluster_std) + " " + kv("center_box", p.center_box)};
  t.columns = feature_columns(p.n_features);
  t.values = std::move(data);
  return t;
}

Table make_moons(const MoonsParams& p, std::uint64_t seed) {
  if (p.n_samples < 2) throw InputError("moons: need at least 2 samples");
  if (!(p.noise >= 0.0)) throw InputError("moons: noise must be nonnegative");
  Rng rng(seed);
  const int n_outer = p.n_samples / 2;
  const int n_inner = p.n_samples - n_outer;
  Matrix data(p.n_samples, 3);
  const auto arc = [](int i, int count) {
    return count == 1 ? 0.0 : std::numbers::pi * i / (count - 1);
  };
  for (int i = 0; i < n_outer; ++i) {
    const double a = arc(i, n_outer);
    data.row(i) << std::cos(a), std::sin(a), 0.0;
  }
  for (int i = 0; i < n_inner; ++i) {
    const double a = arc(i, n_inner);
    data.row(n_outer + i) << 1.0 - std::cos(a), 0.5 - std::sin(a), 1.0;
  }
  if (p.noise > 0.0) {
    for (int i = 0; i < p.n_samples; ++i) {
      data(i, 0) += p.noise * rng.normal();
      data(i, 1) += p.noise * rng.normal();
    }
  }
  shuffle_rows(data, rng);
  Table t;
  t.comments = {"generator=moons seed=" + std::to_string(seed),
                "n_samples=" + std::to_string(p.n_samples) + " " + kv("noise", p.noise)};
  t.columns = feature_columns(2);
  t.values = std::move(data);
  return t;
}

Table make_imbalanced_cliff(const ImbalancedCliffParams& p, std::uint64_t seed) {
  if (p.n_samples < 2) throw InputError("imbalanced-cliff: need at least 2 samples");
  if (!(p.positive_rate > 0.0 && p.positive_rate < 1.0)) {
    throw InputError("imbalanced-cliff: positive_rate must lie in (0, 1)");
  }
  if (p.n_noise_blocks < 0 || p.block_width < 1 || p.n_filler < 0) {
    throw InputError("imbalanced-cliff: block counts must be nonnegative");
  }
  if (!(p.noise_scale > 0.0)) throw InputError("imbalanced-cliff: noise_scale must be positive");
  const auto n_pos = std::max<long>(
      1, std::lround(p.positive_rate * static_cast<double>(p.n_samples)));
  if (n_pos >= p.n_samples) throw InputError("imbalanced-cliff: no negatives left");

  Rng rng(seed);
  std::vector<int> label(static_cast<std::size_t>(p.n_samples), 0);
  std::fill(label.begin(), label.begin() + n_pos, 1);
  rng.shuffle(label);

  const int f = p.n_noise_blocks * p.block_width + 1 + p.n_filler;
  Matrix data(p.n_samples, f + 1);
  for (int i = 0; i < p.n_samples; ++i) {
    const int y = label[static_cast<std::size_t>(i)];
    int col = 0;
    // Correlated noise blocks: one shared factor per block plus small jitter.
    for (int b = 0; b < p.n_noise_blocks; ++b) {
      const double factor = p.noise_scale * (rng.normal() + (y ? p.decoy_shift : 0.0));
      for (int k = 0; k < p.block_width; ++k) data(i, col++) = factor + 0.1 * rng.normal();
    }
    data(i, col++) = rng.normal() + (y ? p.signal_shift : 0.0);
    for (int k = 0; k < p.n_filler; ++k) data(i, col++) = rng.normal();
    data(i, f) = y;
  }
  Table t;
  t.comments = {"generator=imbalanced-cliff seed=" + std::to_string(seed),
                "n_samples=" + std::to_string(p.n_samples) + " " +
                    kv("positive_rate", p.positive_rate) + " n_positive=" + std::to_string(n_pos),
                "n_noise_blocks=" + std::to_string(p.n_noise_blocks) +
                    " block_width=" + std::to_string(p.block_width) + " " +
                    kv("noise_scale", p.noise_scale) + " " + kv("signal_shift", p.signal_shift) +
                    " n_filler=" + std::to_string(p.n_filler) + " " +
                    kv("decoy_shift", p.decoy_shift),
                "signal column=x" + std::to_string(p.n_noise_blocks * p.block_width + 1)};
  t.columns = feature_columns(f);
  t.values = std::move(data);
  return t;
}

}  // namespace pcov
