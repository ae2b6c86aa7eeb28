#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pcov/classifiers.hpp"
#include "pcov/linalg.hpp"

namespace pcov {

/// Shortest decimal text with 17 significant digits; round-trips exactly.
std::string format_double(double value);
/// Locale-independent parse of a full cell; nullopt when malformed.
std::optional<double> parse_double(std::string_view text);

/// A numeric CSV table. Lines starting with '#' are comments.
struct Table {
  std::vector<std::string> columns;
  Matrix values;
  std::vector<std::string> comments;

  Eigen::Index column_index(const std::string& name) const;
};

Table parse_csv(std::istream& in, const std::string& source = "<stream>");
Table read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Table& table);
void write_csv(const std::filesystem::path& path, const Table& table);

/// Integer labels from named columns; rejects non-integral or negative values.
LabelData labels_from_table(const Table& table, const std::vector<std::string>& columns);

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;
  Matrix features;
  LabelData labels;
};

/// Columns not listed as labels are features when `feature_columns` is empty.
Dataset dataset_from_table(const Table& table, const std::vector<std::string>& label_columns,
                           std::vector<std::string> feature_columns = {});

/// The classic 150-sample, 4-feature, 3-class iris measurements.
Table iris_table();
Dataset load_iris();

struct Split {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

/// Per-class shuffled split of the first label column; each class contributes
/// round(test_fraction · class size) test samples. Index lists are sorted.
Split stratified_split(const LabelData& y, double test_fraction, std::uint64_t seed);
Split random_split(Eigen::Index n, double test_fraction, std::uint64_t seed);
/// Test rows given explicitly; the rest train. Rejects duplicates and out-of-range rows.
Split explicit_split(Eigen::Index n, const std::vector<Eigen::Index>& test);

Matrix select_rows(const Matrix& m, const std::vector<Eigen::Index>& rows);

// Synthetic generators. Each returns columns x1..xf plus "label" and records
// its parameters as comments.

struct BlobsParams {
  int n_samples = 150;
  int n_centers = 3;
  int n_features = 2;
  double cluster_std = 1.0;
  double center_box = 10.0;
};
Table make_blobs(const BlobsParams& params, std::uint64_t seed);

struct MoonsParams {
  int n_samples = 200;
  double noise = 0.1;
};
Table make_moons(const MoonsParams& params, std::uint64_t seed);

/// Rare positive class whose signal lives in a low-variance direction
/// underneath correlated high-variance noise blocks.
struct ImbalancedCliffParams {
  int n_samples = 4000;
  double positive_rate = 0.05;
  int n_noise_blocks = 3;
  int block_width = 4;
  double noise_scale = 4.0;
  double signal_shift = 3.0;
  int n_filler = 4;
  /// Shift of positives along every noise factor, in noise units.
  double decoy_shift = 1.0;
};
Table make_imbalanced_cliff(const ImbalancedCliffParams& params, std::uint64_t seed);

}  // namespace pcov
