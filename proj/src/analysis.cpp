#include "pcov/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <thread>

#include "pcov/error.hpp"

namespace pcov {

double ConfusionMatrix::accuracy() const {
  const long n = total();
  return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

namespace {

long binary_cell(const ConfusionMatrix& m, int truth, int predicted) {
  if (m.counts.rows() != 2 || m.counts.cols() != 2) {
    throw InputError("TP/TN/FP/FN are defined for binary confusion matrices only");
  }
  return m.counts(truth, predicted);
}

}  // namespace

long ConfusionMatrix::true_positives() const { return binary_cell(*this, 1, 1); }
long ConfusionMatrix::true_negatives() const { return binary_cell(*this, 0, 0); }
long ConfusionMatrix::false_positives() const { return binary_cell(*this, 0, 1); }
long ConfusionMatrix::false_negatives() const { return binary_cell(*this, 1, 0); }

ConfusionMatrix confusion_matrix(const IndexVector& truth, const IndexVector& predicted,
                                 int n_classes) {
  if (truth.size() != predicted.size()) {
    throw InputError("confusion_matrix: " + std::to_string(truth.size()) + " labels but " +
                     std::to_string(predicted.size()) + " predictions");
  }
  if (n_classes < 1) throw InputError("confusion_matrix: need at least one class");
  ConfusionMatrix m;
  m.counts.setZero(n_classes, n_classes);
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (truth(i) < 0 || truth(i) >= n_classes || predicted(i) < 0 || predicted(i) >= n_classes) {
      throw InputError("confusion_matrix: label out of range at row " + std::to_string(i));
    }
    ++m.counts(truth(i), predicted(i));
  }
  return m;
}

unsigned worker_threads() {
  if (const char* env = std::getenv("PCOV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// α sweep

namespace {

/// Maps each label's classes present in training onto 0..p-1 and back.
struct LabelRemap {
  std::vector<std::vector<int>> present;  // per label, sorted original classes

  explicit LabelRemap(const LabelData& train) {
    present.resize(static_cast<std::size_t>(train.n_labels()));
    for (int l = 0; l < train.n_labels(); ++l) {
      std::set<int> seen(train.labels.col(l).data(),
                         train.labels.col(l).data() + train.n_samples());
      present[static_cast<std::size_t>(l)].assign(seen.begin(), seen.end());
    }
  }

  bool identity(const LabelData& train) const {
    for (int l = 0; l < train.n_labels(); ++l) {
      const auto& p = present[static_cast<std::size_t>(l)];
      if (static_cast<int>(p.size()) != train.classes_per_label[static_cast<std::size_t>(l)]) {
        return false;
      }
    }
    return true;
  }

  LabelData compact(const LabelData& y) const {
    LabelData out;
    out.labels = y.labels;
    for (int l = 0; l < y.n_labels(); ++l) {
      const auto& p = present[static_cast<std::size_t>(l)];
      out.classes_per_label.push_back(static_cast<int>(p.size()));
      for (Eigen::Index i = 0; i < y.n_samples(); ++i) {
        const auto it = std::lower_bound(p.begin(), p.end(), y.labels(i, l));
        out.labels(i, l) = static_cast<int>(it - p.begin());
      }
    }
    return out;
  }

  LabelData expand(const LabelData& y, const std::vector<int>& classes_per_label) const {
    LabelData out;
    out.labels = y.labels;
    out.classes_per_label = classes_per_label;
    for (int l = 0; l < y.n_labels(); ++l) {
      const auto& p = present[static_cast<std::size_t>(l)];
      for (Eigen::Index i = 0; i < y.n_samples(); ++i) {
        out.labels(i, l) = p[static_cast<std::size_t>(y.labels(i, l))];
      }
    }
    return out;
  }
};

std::vector<ConfusionMatrix> score(const LabelData& truth, const LabelData& predicted,
                                   const std::vector<int>& classes_per_label, double* mean_acc) {
  std::vector<ConfusionMatrix> out;
  double acc = 0.0;
  for (int l = 0; l < truth.n_labels(); ++l) {
    out.push_back(confusion_matrix(truth.column(l), predicted.column(l),
                                   classes_per_label[static_cast<std::size_t>(l)]));
    acc += out.back().accuracy();
  }
  *mean_acc = acc / static_cast<double>(truth.n_labels());
  return out;
}

LabelData probe_predict(const Matrix& t_train, const LabelData& y_train, const Matrix& t_test,
                        const ClassifierSpec& probe) {
  const auto models = fit_classifier(t_train, y_train, probe);
  return activate(evidence(models, t_test));
}

}  // namespace

AlphaSweepReport alpha_sweep(const Matrix& x_train, const LabelData& y_train,
                             const Matrix& x_test, const LabelData& y_test,
                             const std::vector<double>& alphas, const PcovSpec& spec,
                             const ClassifierSpec& probe) {
  if (alphas.empty()) throw InputError("alpha_sweep: need at least one alpha value");
  if (x_train.rows() != y_train.n_samples() || x_test.rows() != y_test.n_samples()) {
    throw InputError("alpha_sweep: feature and label row counts differ");
  }
  if (x_train.cols() != x_test.cols()) {
    throw InputError("alpha_sweep: train and test feature counts differ");
  }
  if (y_train.n_labels() != y_test.n_labels()) {
    throw InputError("alpha_sweep: train and test label counts differ");
  }
  if (x_test.rows() == 0) throw InputError("alpha_sweep: empty test set");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw InputError("alpha_sweep: alpha outside [0, 1]");
  }
  y_test.validate_range();

  AlphaSweepReport report;
  report.alphas = alphas;

  // Confusion matrices cover every class seen in either split.
  std::vector<int> classes(static_cast<std::size_t>(y_train.n_labels()));
  for (int l = 0; l < y_train.n_labels(); ++l) {
    classes[static_cast<std::size_t>(l)] =
        std::max({y_train.classes_per_label[static_cast<std::size_t>(l)],
                  y_test.classes_per_label[static_cast<std::size_t>(l)],
                  y_train.labels.col(l).maxCoeff() + 1, y_test.labels.col(l).maxCoeff() + 1});
  }

  const LabelRemap remap(y_train);
  if (!remap.identity(y_train)) {
    report.warnings.push_back("some classes are absent from the training split; they are "
                              "never predicted");
  }
  for (int l = 0; l < y_test.n_labels(); ++l) {
    const auto& p = remap.present[static_cast<std::size_t>(l)];
    for (Eigen::Index i = 0; i < y_test.n_samples(); ++i) {
      if (!std::binary_search(p.begin(), p.end(), y_test.labels(i, l))) {
        report.warnings.push_back("label " + std::to_string(l) + ": test class " +
                                  std::to_string(y_test.labels(i, l)) +
                                  " is absent from training; scored anyway");
        break;
      }
    }
  }
  const LabelData y_fit = remap.compact(y_train);

  {
    const ScaledData scaled = center_and_scale(x_train, spec.config.standardize);
    const LabelData pred = remap.expand(
        probe_predict(scaled.values, y_fit, scaled.recipe.apply(x_test), probe), classes);
    report.baseline_confusion = score(y_test, pred, classes, &report.baseline_accuracy);
  }

  report.entries.resize(alphas.size());
  std::vector<std::exception_ptr> errors(alphas.size());
  auto run = [&](std::size_t i) {
    try {
      PcovConfig config = spec.config;
      config.alpha = alphas[i];
      config.mode = Mode::Classification;
      AlphaSweepEntry& entry = report.entries[i];
      entry.alpha = alphas[i];
      if (spec.kernel) {
        const KernelPcovModel model =
            fit_kpcovc(x_train, y_fit, *spec.kernel, config, spec.classifier);
        entry.train_embedding = model.training_latent;
        entry.test_embedding = transform(model, x_test);
        entry.warnings = model.warnings;
      } else {
        const PcovModel model = fit_pcovc(x_train, y_fit, config, spec.classifier);
        entry.train_embedding = model.training_latent;
        entry.test_embedding = transform(model, x_test);
        entry.warnings = model.warnings;
      }
      const LabelData pred = remap.expand(
          probe_predict(entry.train_embedding, y_fit, entry.test_embedding, probe), classes);
      entry.confusion = score(y_test, pred, classes, &entry.accuracy);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const unsigned n_workers =
      std::min<unsigned>(worker_threads(), static_cast<unsigned>(alphas.size()));
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < alphas.size(); ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < alphas.size(); i = next++) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  double best = -1.0;
  for (const auto& entry : report.entries) {
    if (entry.accuracy > best || (entry.accuracy == best && entry.alpha > report.best_alpha)) {
      best = entry.accuracy;
      report.best_alpha = entry.alpha;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Boundary pairs

std::vector<BoundaryPair> boundary_pairs(const Matrix& t, const IndexVector& labels, int class_a,
                                         int class_b, int d, int m, bool unique_samples) {
  if (t.rows() != labels.size()) {
    throw InputError("boundary_pairs: " + std::to_string(t.rows()) + " latent rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (d < 1 || d > t.cols()) {
    throw InputError("boundary_pairs: d=" + std::to_string(d) + " but " +
                     std::to_string(t.cols()) + " latent components are available");
  }
  if (m < 0) throw InputError("boundary_pairs: m must be nonnegative");
  if (class_a == class_b) throw InputError("boundary_pairs: the two classes must differ");
  require_finite(t, "latent projection");

  std::vector<Eigen::Index> a_idx;
  std::vector<Eigen::Index> b_idx;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) == class_a) a_idx.push_back(i);
    if (labels(i) == class_b) b_idx.push_back(i);
  }
  if (a_idx.empty()) throw InputError("boundary_pairs: class " + std::to_string(class_a) + " is empty");
  if (b_idx.empty()) throw InputError("boundary_pairs: class " + std::to_string(class_b) + " is empty");

  const Matrix lead = t.leftCols(d);
  std::vector<BoundaryPair> pairs;
  pairs.reserve(a_idx.size() * b_idx.size());
  for (Eigen::Index a : a_idx) {
    for (Eigen::Index b : b_idx) {
      pairs.push_back({a, b, class_a, class_b, (lead.row(a) - lead.row(b)).norm()});
    }
  }
  const auto less = [](const BoundaryPair& p, const BoundaryPair& q) {
    if (p.distance != q.distance) return p.distance < q.distance;
    if (p.index_a != q.index_a) return p.index_a < q.index_a;
    return p.index_b < q.index_b;
  };

  const auto want = static_cast<std::size_t>(m);
  if (!unique_samples) {
    const std::size_t keep = std::min(want, pairs.size());
    std::partial_sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(keep),
                      pairs.end(), less);
    pairs.resize(keep);
    return pairs;
  }
  std::sort(pairs.begin(), pairs.end(), less);
  std::set<Eigen::Index> used;
  std::vector<BoundaryPair> out;
  for (const auto& p : pairs) {
    if (out.size() >= want) break;
    if (used.count(p.index_a) || used.count(p.index_b)) continue;
    used.insert(p.index_a);
    used.insert(p.index_b);
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlations

std::vector<Eigen::Index> CorrelationTable::order_by(Eigen::Index dim) const {
  if (dim < 0 || dim >= abs_r.cols()) throw InputError("order_by: latent dimension out of range");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(abs_r.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (undefined(a, dim) != undefined(b, dim)) return !undefined(a, dim);
    return abs_r(a, dim) > abs_r(b, dim);
  });
  return order;
}

CorrelationTable latent_feature_correlations(const Matrix& x, const Matrix& t, int dims,
                                             std::vector<std::string> feature_names) {
  if (x.rows() != t.rows()) {
    throw InputError("latent_feature_correlations: " + std::to_string(x.rows()) +
                     " feature rows but " + std::to_string(t.rows()) + " latent rows");
  }
  if (dims < 1 || dims > t.cols()) {
    throw InputError("latent_feature_correlations: dims=" + std::to_string(dims) + " but " +
                     std::to_string(t.cols()) + " latent columns are available");
  }
  if (feature_names.empty()) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) feature_names.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != x.cols()) {
    throw InputError("latent_feature_correlations: feature name count mismatch");
  }
  CorrelationTable table;
  table.feature_names = std::move(feature_names);
  table.abs_r = Matrix::Zero(x.cols(), dims);
  table.undefined.setConstant(x.cols(), dims, false);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (int k = 0; k < dims; ++k) {
      const auto r = pearson_correlation(x.col(j), t.col(k));
      if (r) {
        table.abs_r(j, k) = std::abs(*r);
      } else {
        table.undefined(j, k) = true;
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Decision grids

GridBounds embedding_bounds(const Matrix& t, double margin) {
  if (t.cols() < 2 || t.rows() == 0) {
    throw InputError("embedding_bounds: need a non-empty embedding with two columns");
  }
  require_finite(t, "embedding");
  GridBounds b;
  const auto span = [&](Eigen::Index c, double& lo, double& hi) {
    lo = t.col(c).minCoeff();
    hi = t.col(c).maxCoeff();
    double w = hi - lo;
    if (w <= 0.0) w = std::max(std::abs(lo), 1.0);
    lo -= margin * w;
    hi += margin * w;
  };
  span(0, b.x_min, b.x_max);
  span(1, b.y_min, b.y_max);
  return b;
}

double LabelRaster::x_at(int col) const {
  return bounds.x_min + (bounds.x_max - bounds.x_min) * col / (nx - 1);
}

double LabelRaster::y_at(int row) const {
  return bounds.y_min + (bounds.y_max - bounds.y_min) * row / (ny - 1);
}

int LabelRaster::nearest(double x, double y) const {
  const double fx = (x - bounds.x_min) / (bounds.x_max - bounds.x_min) * (nx - 1);
  const double fy = (y - bounds.y_min) / (bounds.y_max - bounds.y_min) * (ny - 1);
  const int col = std::clamp(static_cast<int>(std::lround(fx)), 0, nx - 1);
  const int row = std::clamp(static_cast<int>(std::lround(fy)), 0, ny - 1);
  return at(row, col);
}

int LabelRaster::n_distinct() const {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

LabelRaster decision_grid(const LatentPredictor& predictor, const GridBounds& bounds, int nx,
                          int ny) {
  if (nx < 2 || ny < 2) throw InputError("decision_grid: resolution must be at least 2 per axis");
  if (!std::isfinite(bounds.x_min) || !std::isfinite(bounds.x_max) ||
      !std::isfinite(bounds.y_min) || !std::isfinite(bounds.y_max) ||
      !(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
    throw InputError("decision_grid: bounds must be finite with max > min");
  }
  LabelRaster raster;
  raster.nx = nx;
  raster.ny = ny;
  raster.bounds = bounds;
  Matrix points(static_cast<Eigen::Index>(nx) * ny, 2);
  for (int r = 0; r < ny; ++r) {
    for (int c = 0; c < nx; ++c) {
      const Eigen::Index i = static_cast<Eigen::Index>(r) * nx + c;
      points(i, 0) = raster.x_at(c);
      points(i, 1) = raster.y_at(r);
    }
  }
  const IndexVector labels = predictor(points);
  if (labels.size() != points.rows()) throw Error("decision_grid: predictor returned wrong size");
  raster.labels.assign(labels.data(), labels.data() + labels.size());
  return raster;
}

namespace {

void require_2d(Eigen::Index k) {
  if (k != 2) {
    throw InputError("decision_grid: latent space has " + std::to_string(k) +
                     " dimensions, expected 2");
  }
}

void require_label(int label, int n_labels) {
  if (label < 0 || label >= n_labels) throw InputError("decision_grid: label index out of range");
}

}  // namespace

LabelRaster decision_grid(const PcovModel& model, const GridBounds& bounds, int nx, int ny,
                          int label) {
  require_2d(model.n_components());
  require_label(label, static_cast<int>(model.classes_per_label.size()));
  return decision_grid(
      [&](const Matrix& t) { return predict_from_latent(model, t).column(label); }, bounds, nx,
      ny);
}

LabelRaster decision_grid(const KernelPcovModel& model, const GridBounds& bounds, int nx, int ny,
                          int label) {
  require_2d(model.n_components());
  require_label(label, static_cast<int>(model.classes_per_label.size()));
  return decision_grid(
      [&](const Matrix& t) { return predict_from_latent(model, t).column(label); }, bounds, nx,
      ny);
}

LabelRaster decision_grid(const LinearClassifierModel& probe, const GridBounds& bounds, int nx,
                          int ny) {
  require_2d(probe.n_features());
  return decision_grid([&](const Matrix& t) { return activate_matrix(evidence_matrix(probe, t)); },
                       bounds, nx, ny);
}

void write_pgm(const LabelRaster& raster, std::ostream& out) {
  int max_label = 0;
  for (int v : raster.labels) max_label = std::max(max_label, v);
  out << "P5\n" << raster.nx << ' ' << raster.ny << "\n255\n";
  for (int r = raster.ny - 1; r >= 0; --r) {
    for (int c = 0; c < raster.nx; ++c) {
      const int v = raster.at(r, c);
      const int level = max_label == 0 ? 0 : (v * 255) / max_label;
      out.put(static_cast<char>(static_cast<unsigned char>(level)));
    }
  }
}

}  // namespace pcov
