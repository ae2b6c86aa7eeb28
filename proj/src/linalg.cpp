#include "pcov/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pcov/error.hpp"

namespace pcov {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + " contains non-finite entries");
  }
}

Vector canonicalize_column_signs(Matrix& columns) {
  Vector signs = Vector::Ones(columns.cols());
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    auto col = columns.col(j);
    if (col.size() == 0) continue;
    const double peak = col.cwiseAbs().maxCoeff();
    if (peak == 0.0) continue;
    const double threshold = peak * (1.0 - 1e-10);
    Eigen::Index pivot = 0;
    while (std::abs(col(pivot)) < threshold) ++pivot;
    if (col(pivot) < 0.0) {
      col = -col;
      signs(j) = -1.0;
    }
  }
  return signs;
}

SymmetricEigen eigh_descending(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw InputError("eigh_descending: matrix is " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ", expected square");
  }
  require_finite(a, "eigh_descending input");
  const Eigen::Index n = a.rows();
  if (n == 0) return {Vector(0), Matrix(0, 0)};

  const double norm = a.norm();
  const double asym = (a - a.transpose()).norm();
  if (norm > 0.0 && asym > 1e-8 * norm) {
    throw InputError("eigh_descending: matrix is not symmetric (relative asymmetry " +
                     std::to_string(asym / norm) + ")");
  }
  const Matrix sym = 0.5 * (a + a.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    // Eigen's QR sweep gives up after 30 iterations per eigenvalue.
    throw ConvergenceError("eigh_descending: tridiagonal QR did not converge",
                           static_cast<int>(30 * n));
  }

  // Eigen returns ascending order.
  SymmetricEigen out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  canonicalize_column_signs(out.eigenvectors);
  return out;
}

Eigen::Index numerical_rank(const Vector& descending_eigenvalues, double rcond) {
  if (descending_eigenvalues.size() == 0) return 0;
  const double top = descending_eigenvalues(0);
  if (!(top > 0.0)) return 0;
  const double cutoff = rcond * top;
  Eigen::Index rank = 0;
  while (rank < descending_eigenvalues.size() && descending_eigenvalues(rank) > cutoff) {
    ++rank;
  }
  return rank;
}

Matrix psd_power(const Matrix& a, double p, double rcond) {
  const SymmetricEigen eig = eigh_descending(a);
  const Eigen::Index n = a.rows();
  if (n == 0) return Matrix(0, 0);

  const double top = eig.eigenvalues(0);
  const double scale = std::max(std::abs(top), std::abs(eig.eigenvalues(n - 1)));
  if (eig.eigenvalues(n - 1) < -1e-8 * scale) {
    throw InputError("psd_power: matrix is not positive semidefinite (min eigenvalue " +
                     std::to_string(eig.eigenvalues(n - 1)) + ")");
  }
  const Eigen::Index rank = numerical_rank(eig.eigenvalues, rcond);
  if (rank == 0) {
    if (p < 0.0) {
      throw InputError("psd_power: matrix is numerically zero, negative power undefined");
    }
    return Matrix::Zero(n, n);
  }

  const auto basis = eig.eigenvectors.leftCols(rank);
  Vector powered(rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    powered(i) = std::pow(eig.eigenvalues(i), p);
  }
  Matrix out = basis * powered.asDiagonal() * basis.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix ScalingRecipe::apply(const Matrix& x) const {
  if (x.cols() != n_features()) {
    throw InputError("scaling recipe expects " + std::to_string(n_features()) +
                     " features, got " + std::to_string(x.cols()));
  }
  Matrix out = x.rowwise() - column_means;
  out.array().rowwise() /= (column_scales * global_scale).array();
  return out;
}

Matrix ScalingRecipe::invert(const Matrix& scaled) const {
  if (scaled.cols() != n_features()) {
    throw InputError("scaling recipe expects " + std::to_string(n_features()) +
                     " features, got " + std::to_string(scaled.cols()));
  }
  Matrix out = scaled;
  out.array().rowwise() *= (column_scales * global_scale).array();
  out.rowwise() += column_means;
  return out;
}

ScaledData center_and_scale(const Matrix& x, bool standardize, bool normalize_trace) {
  if (x.rows() < 2) {
    throw InputError("center_and_scale: need at least 2 rows, got " + std::to_string(x.rows()));
  }
  require_finite(x, "feature matrix");

  ScalingRecipe recipe;
  recipe.column_means = x.colwise().mean();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    // Exact mean for constant columns so they map to exact zeros.
    if ((x.col(j).array() == x(0, j)).all()) recipe.column_means(j) = x(0, j);
  }
  recipe.column_scales = RowVector::Ones(x.cols());
  Matrix centered = x.rowwise() - recipe.column_means;

  if (standardize) {
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double sd = std::sqrt(centered.col(j).squaredNorm() / n);
      // Columns with (numerically) zero spread keep unit scale.
      const double magnitude = std::max(std::abs(recipe.column_means(j)), 1.0);
      if (sd > 1e-14 * magnitude) recipe.column_scales(j) = sd;
    }
  }
  if (normalize_trace) {
    const double energy = (centered.array().rowwise() / recipe.column_scales.array())
                              .matrix()
                              .squaredNorm();
    if (energy > 0.0) {
      recipe.global_scale = std::sqrt(energy / static_cast<double>(x.rows()));
    }
  }

  ScaledData out;
  out.values = recipe.apply(x);
  out.recipe = std::move(recipe);
  return out;
}

std::optional<double> pearson_correlation(const Eigen::Ref<const Vector>& a,
                                          const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) {
    throw InputError("pearson_correlation: length mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw InputError("pearson_correlation: need at least 2 samples");
  if (!a.allFinite() || !b.allFinite()) {
    throw InputError("pearson_correlation: non-finite input");
  }
  if (a.maxCoeff() == a.minCoeff() || b.maxCoeff() == b.minCoeff()) return std::nullopt;

  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double saa = da.squaredNorm();
  const double sbb = db.squaredNorm();
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  const double r = da.dot(db) / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace pcov
