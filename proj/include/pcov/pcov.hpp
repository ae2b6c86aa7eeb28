#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pcov/classifiers.hpp"
#include "pcov/kernels.hpp"
#include "pcov/linalg.hpp"

namespace pcov {

/// Which eigenproblem defines the latent space.
///  - SampleSpace:  n × n modified Gram matrix K̃ = αXXᵀ + (1−α)SSᵀ
///  - FeatureSpace: f × f modified covariance C̃ (same nonzero spectrum)
///  - Auto:         sample space when n_features > n_samples, else feature space
enum class Route { Auto, SampleSpace, FeatureSpace };
enum class Mode { Regression, Classification };

std::string_view to_string(Route route);
std::string_view to_string(Mode mode);
Route parse_route(std::string_view name);
Mode parse_mode(std::string_view name);

struct PcovConfig {
  double alpha = 0.5;
  int n_components = 2;
  Route route = Route::Auto;
  Mode mode = Mode::Classification;
  double rcond = kDefaultRcond;
  /// Divide features by their standard deviation after centering.
  bool standardize = false;
  /// Ridge strength for the regression approximation Ŷ (regression mode).
  double regression_lambda = 0.0;

  void validate() const;
};

enum class MatrixKind { Gram, Covariance };

struct ModifiedMatrix {
  Matrix values;
  MatrixKind kind = MatrixKind::Gram;
  double alpha = 1.0;
};

/// Ŷ = X·(XᵀX + λI)⁻¹XᵀY, using the pseudoinverse when λ = 0 and XᵀX is
/// rank deficient. X and Y are expected to be column-centered.
Matrix regression_approximation(const Matrix& x, const Matrix& y, double lambda,
                                double rcond = kDefaultRcond);

/// αXXᵀ + (1−α)SSᵀ.
ModifiedMatrix modified_gram(const Matrix& x, const Matrix& s, double alpha);
/// αXXᵀ + (1−α)ZZᵀ with ZZᵀ from the evidence-tensor rule.
ModifiedMatrix modified_gram(const Matrix& x, const EvidenceTensor& z, double alpha);

/// αXᵀX + (1−α)(XᵀX)^{-1/2}XᵀSSᵀX(XᵀX)^{-1/2}.
ModifiedMatrix modified_covariance(const Matrix& x, const Matrix& s, double alpha,
                                   double rcond = kDefaultRcond);

/// (ZZᵀ)ᵢⱼ = Σ_c Σ_l Z[i,c,l]·Z[j,c,l], summing over each label's own class
/// range. Accumulation order is fixed: classes outer, labels inner.
Matrix multilabel_gram_contribution(const EvidenceTensor& z);

/// A fitted linear PCovR / PCovC model.
///
/// All projectors act on recipe-scaled features: the recipe centers (and
/// optionally standardizes) the columns and applies a global factor making
/// trace(XXᵀ) = n_samples on the training data.
struct PcovModel {
  PcovConfig config;
  Route route_used = Route::FeatureSpace;
  ScalingRecipe recipe;

  Matrix pxt;  ///< n_features × k
  Matrix ptx;  ///< k × n_features
  Matrix ptz;  ///< k × target width: P_TZ (classification) or P_TY (regression)
  /// Added to T·ptz: classifier intercepts, or the target means.
  RowVector target_offset;
  /// Spectrum of the decomposed modified matrix, descending.
  Vector eigenvalues;
  /// Factor applied to the centered approximation so that trace(SSᵀ) = n_samples.
  double target_scale = 1.0;

  /// Classification: one fitted classifier per label.
  std::vector<LinearClassifierModel> classifiers;
  std::vector<int> classes_per_label;
  /// Regression: P_XY on scaled features.
  Matrix regression_weights;

  std::vector<std::string> warnings;
  /// Training latent projection, computed with the same code path as transform().
  Matrix training_latent;

  Eigen::Index n_components() const { return pxt.cols(); }
  Eigen::Index n_features() const { return pxt.rows(); }
  Vector retained_eigenvalues() const { return eigenvalues.head(n_components()); }
};

PcovModel fit_pcovc(const Matrix& x, const LabelData& y, const PcovConfig& config,
                    const ClassifierSpec& classifier);
PcovModel fit_pcovr(const Matrix& x, const Matrix& y, const PcovConfig& config);

Matrix transform(const PcovModel& model, const Matrix& x);
Matrix inverse_transform(const PcovModel& model, const Matrix& t);

/// T·P_TZ (+ offset) as an evidence tensor.
EvidenceTensor latent_evidence(const PcovModel& model, const Matrix& t);
LabelData predict_from_latent(const PcovModel& model, const Matrix& t);
LabelData predict(const PcovModel& model, const Matrix& x);
/// Regression-mode predictions T·P_TY + ȳ.
Matrix predict_targets(const PcovModel& model, const Matrix& x);

/// Kernel PCovC: K̃ = αK + (1−α)ZZᵀ with Z = K·P_KZ from a linear classifier
/// fitted on the centered kernel as features.
struct KernelPcovModel {
  PcovConfig config;
  KernelSpec kernel;
  ScalingRecipe recipe;
  Matrix training_features;  ///< recipe-scaled; empty when fitted from a kernel
  KernelCentering centering;
  /// Factor applied to the centered kernel so that trace(K) = n_samples.
  double kernel_scale = 1.0;
  double target_scale = 1.0;

  Matrix pkt;  ///< n_train × k
  Matrix ptx;  ///< k × n_features (empty when fitted from a kernel)
  Matrix ptz;  ///< k × evidence width
  RowVector target_offset;
  Vector eigenvalues;

  std::vector<LinearClassifierModel> classifiers;
  std::vector<int> classes_per_label;
  std::vector<std::string> warnings;
  Matrix training_latent;

  Eigen::Index n_components() const { return pkt.cols(); }
};

KernelPcovModel fit_kpcovc(const Matrix& x, const LabelData& y, const KernelSpec& kernel,
                           const PcovConfig& config, const ClassifierSpec& classifier);
/// Fit from a precomputed (uncentered, square) training kernel.
KernelPcovModel fit_kpcovc(const KernelMatrix& k, const LabelData& y, const PcovConfig& config,
                           const ClassifierSpec& classifier);

Matrix transform(const KernelPcovModel& model, const Matrix& x);
/// Latent projection from an uncentered cross-kernel (rows × n_train).
Matrix transform_kernel(const KernelPcovModel& model, const KernelMatrix& cross);
Matrix inverse_transform(const KernelPcovModel& model, const Matrix& t);
EvidenceTensor latent_evidence(const KernelPcovModel& model, const Matrix& t);
LabelData predict_from_latent(const KernelPcovModel& model, const Matrix& t);
LabelData predict(const KernelPcovModel& model, const Matrix& x);

}  // namespace pcov
