#pragma once

#include <Eigen/Dense>
#include <optional>

namespace pcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using IndexVector = Eigen::VectorXi;

/// Default relative eigenvalue cutoff (fraction of the largest eigenvalue).
inline constexpr double kDefaultRcond = 1e-12;

/// Eigenpairs of a real symmetric matrix.
///
/// Eigenvalues are sorted descending and every eigenvector column is unit
/// norm with its largest-magnitude entry positive.
struct SymmetricEigen {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Full eigendecomposition of a symmetric matrix.
///
/// Inputs with relative asymmetry below 1e-8 are symmetrized as (A + Aᵀ)/2;
/// anything larger throws InputError, as do non-square or non-finite inputs.
SymmetricEigen eigh_descending(const Matrix& a);

/// Flip the sign of each column so its largest-magnitude entry is positive.
/// Near-ties (within 1e-10 relative) resolve to the lowest row index.
/// Returns the applied signs (+1/-1 per column).
Vector canonicalize_column_signs(Matrix& columns);

/// U·diag(λᵖ)·Uᵀ for a symmetric PSD matrix, discarding eigenvalues below
/// rcond·λ_max (they contribute zero for either sign of p).
Matrix psd_power(const Matrix& a, double p, double rcond = kDefaultRcond);

/// Number of eigenvalues above rcond·λ_max (0 for an all-nonpositive spectrum).
Eigen::Index numerical_rank(const Vector& descending_eigenvalues,
                            double rcond = kDefaultRcond);

/// Affine feature preprocessing fitted on training data.
///
/// scaled = (x - column_means) / (column_scales * global_scale)
struct ScalingRecipe {
  RowVector column_means;
  RowVector column_scales;
  double global_scale = 1.0;

  Eigen::Index n_features() const { return column_means.size(); }
  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& scaled) const;
};

struct ScaledData {
  Matrix values;
  ScalingRecipe recipe;
};

/// Center columns; with `standardize` also divide by the population standard
/// deviation (zero-variance columns keep scale 1). With `normalize_trace` the
/// result is further divided by a global factor so that trace(XXᵀ) = n_rows.
ScaledData center_and_scale(const Matrix& x, bool standardize,
                            bool normalize_trace = false);

/// Pearson correlation; std::nullopt when either input is constant.
std::optional<double> pearson_correlation(const Eigen::Ref<const Vector>& a,
                                          const Eigen::Ref<const Vector>& b);

/// Throws InputError when any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

}  // namespace pcov
