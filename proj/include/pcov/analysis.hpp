#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pcov/classifiers.hpp"
#include "pcov/kernels.hpp"
#include "pcov/linalg.hpp"
#include "pcov/pcov.hpp"

namespace pcov {

/// counts(i, j): samples of true class i predicted as class j.
struct ConfusionMatrix {
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;

  long total() const { return counts.sum(); }
  long correct() const { return counts.trace(); }
  double accuracy() const;

  // Binary view with class 1 as the positive class.
  long true_positives() const;
  long true_negatives() const;
  long false_positives() const;
  long false_negatives() const;
};

ConfusionMatrix confusion_matrix(const IndexVector& truth, const IndexVector& predicted,
                                 int n_classes);

/// What the sweep fits at each α. A kernel turns the fit into kernel PCovC.
struct PcovSpec {
  PcovConfig config;
  ClassifierSpec classifier;
  std::optional<KernelSpec> kernel;
};

struct AlphaSweepEntry {
  double alpha = 0.0;
  std::vector<ConfusionMatrix> confusion;  ///< one per label
  double accuracy = 0.0;                   ///< mean over labels
  Matrix train_embedding;
  Matrix test_embedding;
  std::vector<std::string> warnings;
};

struct AlphaSweepReport {
  std::vector<double> alphas;
  std::vector<AlphaSweepEntry> entries;
  /// Probe fitted on the full scaled feature space.
  std::vector<ConfusionMatrix> baseline_confusion;
  double baseline_accuracy = 0.0;
  /// Highest test accuracy; ties go to the larger α.
  double best_alpha = 0.0;
  std::vector<std::string> warnings;
};

/// Number of worker threads: PCOV_THREADS when set to a positive integer,
/// otherwise the hardware concurrency.
unsigned worker_threads();

AlphaSweepReport alpha_sweep(const Matrix& x_train, const LabelData& y_train,
                             const Matrix& x_test, const LabelData& y_test,
                             const std::vector<double>& alphas, const PcovSpec& spec,
                             const ClassifierSpec& probe = {});

struct BoundaryPair {
  Eigen::Index index_a = 0;
  Eigen::Index index_b = 0;
  int class_a = 0;
  int class_b = 0;
  double distance = 0.0;
};

/// The m closest (class_a, class_b) sample pairs in the first d latent
/// columns, ascending by distance with ties broken by (index_a, index_b).
/// With unique_samples, a sample appears in at most one returned pair.
std::vector<BoundaryPair> boundary_pairs(const Matrix& t, const IndexVector& labels, int class_a,
                                         int class_b, int d, int m, bool unique_samples = false);

struct CorrelationTable {
  std::vector<std::string> feature_names;
  Matrix abs_r;  ///< n_features × dims; 0 where undefined
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> undefined;

  /// Feature indices sorted by descending |r| in one latent dimension;
  /// undefined entries go last.
  std::vector<Eigen::Index> order_by(Eigen::Index dim) const;
};

CorrelationTable latent_feature_correlations(const Matrix& x, const Matrix& t, int dims,
                                             std::vector<std::string> feature_names = {});

struct GridBounds {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
};

/// Bounding box of the first two columns, widened by `margin` of the span per side.
GridBounds embedding_bounds(const Matrix& t, double margin = 0.1);

inline constexpr int kDefaultGridResolution = 300;

/// Labels on an nx × ny lattice including both bounds. Row r holds
/// y = y_min + r·dy, so index 0 is the (x_min, y_min) corner.
struct LabelRaster {
  int nx = 0;
  int ny = 0;
  GridBounds bounds;
  std::vector<int> labels;

  int at(int row, int col) const { return labels[static_cast<std::size_t>(row) * nx + col]; }
  double x_at(int col) const;
  double y_at(int row) const;
  /// Label of the lattice node nearest to (x, y), clamped to the grid.
  int nearest(double x, double y) const;
  int n_distinct() const;
};

using LatentPredictor = std::function<IndexVector(const Matrix&)>;

LabelRaster decision_grid(const LatentPredictor& predictor, const GridBounds& bounds,
                          int nx = kDefaultGridResolution, int ny = kDefaultGridResolution);
LabelRaster decision_grid(const PcovModel& model, const GridBounds& bounds,
                          int nx = kDefaultGridResolution, int ny = kDefaultGridResolution,
                          int label = 0);
LabelRaster decision_grid(const KernelPcovModel& model, const GridBounds& bounds,
                          int nx = kDefaultGridResolution, int ny = kDefaultGridResolution,
                          int label = 0);
LabelRaster decision_grid(const LinearClassifierModel& probe, const GridBounds& bounds,
                          int nx = kDefaultGridResolution, int ny = kDefaultGridResolution);

/// Binary PGM (P5); the top image row is y_max.
void write_pgm(const LabelRaster& raster, std::ostream& out);

}  // namespace pcov
