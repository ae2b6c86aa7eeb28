#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pcov/classifiers.hpp"
#include "pcov/linalg.hpp"

namespace pcov {

/// Principal components of a centered feature matrix.
/// projector columns are the top eigenvectors of XᵀX; P_TX = projectorᵀ.
struct PcaModel {
  Matrix projector;   ///< n_features × k, orthonormal columns
  Vector eigenvalues; ///< full spectrum of XᵀX, descending
  Matrix scores;      ///< training X·projector
  std::vector<std::string> warnings;

  Eigen::Index n_components() const { return projector.cols(); }
};

PcaModel fit_pca(const Matrix& x_centered, int k);
Matrix pca_transform(const PcaModel& model, const Matrix& x_centered);
Matrix pca_inverse_transform(const PcaModel& model, const Matrix& scores);

/// Kernel PCA on a centered training kernel: scores = U_k Λ_k^{1/2}.
struct KpcaModel {
  Matrix coefficients;  ///< n_train × k, U_k Λ_k^{-1/2}
  Vector eigenvalues;
  Matrix scores;
  std::vector<std::string> warnings;
};

KpcaModel fit_kpca(const Matrix& k_centered, int k);
/// Scores for rows of an out-of-sample kernel already centered with training statistics.
Matrix kpca_transform(const KpcaModel& model, const Matrix& k_cross_centered);

/// Fisher linear discriminant analysis.
struct LdaModel {
  Matrix class_means;      ///< n_classes × n_features
  RowVector overall_mean;
  Matrix within_scatter;   ///< S_W
  Matrix between_scatter;  ///< S_B
  Vector priors;
  double shrinkage = 0.0;  ///< ε added to the diagonal of S_W
  Matrix projector;        ///< n_features × k, k ≤ n_classes − 1
  Vector eigenvalues;      ///< generalized eigenvalues of (S_W + εI)⁻¹S_B
  Matrix precision;        ///< inverse pooled covariance used by the discriminant

  Eigen::Index n_components() const { return projector.cols(); }
};

LdaModel fit_lda(const Matrix& x, const LabelData& y, int k);
Matrix lda_transform(const LdaModel& model, const Matrix& x);
/// Linear discriminant: argmax_k xᵀΣ⁻¹μ_k − ½μ_kᵀΣ⁻¹μ_k + log π_k.
IndexVector lda_predict(const LdaModel& model, const Matrix& x);

/// Kernel Fisher discriminant on a centered training kernel.
struct KdaModel {
  Matrix coefficients;  ///< n_train × k
  Vector eigenvalues;
  Matrix scores;
  double shrinkage = 0.0;
};

KdaModel fit_kda(const Matrix& k_centered, const LabelData& y, int k);
Matrix kda_transform(const KdaModel& model, const Matrix& k_cross_centered);

/// Exact Shapley attribution of one prediction.
struct ShapResult {
  Vector values;           ///< one per feature
  double base_value = 0.0; ///< model output with every feature imputed
  double model_output = 0.0;
};

using RowEvaluator = std::function<double(const Vector&)>;

inline constexpr int kMaxExactShapFeatures = 16;

/// Shapley values under the mean-imputation value function: absent features
/// take their background column mean. Enumerates all 2^n feature subsets.
ShapResult exact_shap(const RowEvaluator& model, const Vector& x, const Matrix& background);

}  // namespace pcov
