#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pcov/linalg.hpp"

namespace pcov {

using LabelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Integer class labels, one column per label (task).
///
/// Column l takes values in [0, classes_per_label[l]).
struct LabelData {
  LabelMatrix labels;
  std::vector<int> classes_per_label;

  /// Single-label data; the class count is inferred as max(label) + 1 when
  /// `n_classes` is 0.
  static LabelData single(const std::vector<int>& labels, int n_classes = 0);
  static LabelData single(const IndexVector& labels, int n_classes = 0);
  /// Multilabel data; class counts inferred per column when empty.
  static LabelData multi(const LabelMatrix& labels, std::vector<int> classes_per_label = {});

  Eigen::Index n_samples() const { return labels.rows(); }
  int n_labels() const { return static_cast<int>(labels.cols()); }
  bool is_multilabel() const { return n_labels() > 1; }
  IndexVector column(int label) const { return labels.col(label); }

  /// Rows selected by index, keeping the class counts.
  LabelData rows(const std::vector<Eigen::Index>& index) const;

  /// Range check only (values within [0, n_classes)).
  void validate_range() const;
  /// Range check plus: every class of every label present, at least 2 classes.
  void validate_for_training() const;
};

/// Evidence width for a label with `n_classes` classes: 1 if binary.
inline int evidence_width(int n_classes) { return n_classes == 2 ? 1 : n_classes; }

/// Classifier confidence scores. One n_samples × width slice per label, so
/// ragged class counts across labels are supported.
struct EvidenceTensor {
  std::vector<Matrix> per_label;
  std::vector<int> classes_per_label;

  Eigen::Index n_samples() const { return per_label.empty() ? 0 : per_label.front().rows(); }
  int n_labels() const { return static_cast<int>(per_label.size()); }
  Eigen::Index total_width() const;
  /// All label slices concatenated column-wise.
  Matrix flattened() const;
  /// Inverse of flattened(), using the widths implied by classes_per_label.
  static EvidenceTensor from_flat(const Matrix& flat, const std::vector<int>& classes_per_label);
};

enum class ClassifierFamily { Ridge, Logistic, LinearSvm, Perceptron };

std::string_view to_string(ClassifierFamily family);
ClassifierFamily parse_classifier_family(std::string_view name);

/// A fitted linear classifier for one label: evidence = X·weights + intercept.
struct LinearClassifierModel {
  ClassifierFamily family = ClassifierFamily::Ridge;
  int n_classes = 2;
  Matrix weights;    // n_features × evidence_width
  Vector intercept;  // evidence_width
  double regularization = 0.0;
  int iterations = 0;
  bool converged = true;
  bool used_pseudoinverse = false;
  IndexVector training_predictions;

  Eigen::Index n_features() const { return weights.rows(); }
  Eigen::Index width() const { return weights.cols(); }
};

/// Hyperparameters for every family; each fit only reads its own fields.
struct ClassifierSpec {
  ClassifierFamily family = ClassifierFamily::Logistic;
  double ridge_lambda = 1.0;
  double logistic_lambda = 1e-4;
  double svm_c = 1.0;
  double tol = 1e-8;
  int max_iter = 500;
  int perceptron_epochs = 100;
  std::uint64_t seed = 0;
};

LinearClassifierModel fit_ridge_classifier(const Matrix& x, const LabelData& y, double lambda);
LinearClassifierModel fit_logistic(const Matrix& x, const LabelData& y, double lambda,
                                   double tol = 1e-8, int max_iter = 500);
LinearClassifierModel fit_linear_svm(const Matrix& x, const LabelData& y, double c,
                                     double tol = 1e-8, int max_iter = 500);
LinearClassifierModel fit_perceptron(const Matrix& x, const LabelData& y, int epochs = 100,
                                     std::uint64_t seed = 0);

/// Fit one model per label column with the family selected by `spec`.
std::vector<LinearClassifierModel> fit_classifier(const Matrix& x, const LabelData& y,
                                                  const ClassifierSpec& spec);

/// Mean L2-regularized logistic objective and its gradient, laid out as
/// [vec(W); b] column-major. Exposed so callers can verify optimality.
struct LogisticObjective {
  double value;
  Vector gradient;
};
LogisticObjective logistic_objective(const Matrix& x, const IndexVector& y, int n_classes,
                                     const Matrix& weights, const Vector& intercept,
                                     double lambda);

/// Mean squared-hinge objective for one binary (±1 target) column:
/// ½‖w‖² + (C/n)·Σ max(0, 1 − yᵢ(w·xᵢ + b))².
double squared_hinge_objective(const Matrix& x, const Vector& signed_targets, const Vector& w,
                               double b, double c);

Matrix evidence_matrix(const LinearClassifierModel& model, const Matrix& x);
EvidenceTensor evidence(const LinearClassifierModel& model, const Matrix& x);
EvidenceTensor evidence(const std::vector<LinearClassifierModel>& models, const Matrix& x);

/// Class index per row: sign threshold for width 1, argmax otherwise
/// (ties to the lowest class index).
IndexVector activate_matrix(const Matrix& scores);
LabelData activate(const EvidenceTensor& z);

/// Fraction of rows where every label matches.
double accuracy(const LabelData& truth, const LabelData& predicted);
double accuracy(const IndexVector& truth, const IndexVector& predicted);

}  // namespace pcov
