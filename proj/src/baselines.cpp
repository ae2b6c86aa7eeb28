#include "pcov/baselines.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "pcov/error.hpp"

namespace pcov {

namespace {

Eigen::Index clamp_components(int k, Eigen::Index available, std::vector<std::string>& warnings,
                              const char* who) {
  if (k < 1) throw InputError(std::string(who) + ": k must be at least 1");
  if (available == 0) throw InputError(std::string(who) + ": input is numerically zero");
  if (k > available) {
    warnings.push_back(std::string(who) + ": k=" + std::to_string(k) + " exceeds rank " +
                       std::to_string(available) + "; clamped");
    return available;
  }
  return k;
}

/// Leading generalized eigenvectors of (B, W): B·v = λ·W·v with W positive
/// definite, normalized so Vᵀ·W·V = I.
struct GeneralizedEigen {
  Vector eigenvalues;
  Matrix vectors;
};

GeneralizedEigen generalized_eigen(const Matrix& b, const Matrix& w) {
  const Eigen::LLT<Matrix> chol(w);
  if (chol.info() != Eigen::Success) {
    throw Error("within-class scatter is not positive definite after shrinkage");
  }
  const Matrix l = chol.matrixL();
  const Matrix half = l.triangularView<Eigen::Lower>().solve(b);
  const Matrix whitened = l.triangularView<Eigen::Lower>().solve(half.transpose());
  const SymmetricEigen eig = eigh_descending(0.5 * (whitened + whitened.transpose()));
  GeneralizedEigen out;
  out.eigenvalues = eig.eigenvalues;
  out.vectors = l.transpose().triangularView<Eigen::Upper>().solve(eig.eigenvectors);
  return out;
}

std::vector<std::vector<Eigen::Index>> class_members(const LabelData& y, const char* who) {
  if (y.n_labels() != 1) throw InputError(std::string(who) + " expects single-label data");
  y.validate_for_training();
  const int n_classes = y.classes_per_label[0];
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(n_classes));
  for (Eigen::Index i = 0; i < y.n_samples(); ++i) {
    members[static_cast<std::size_t>(y.labels(i, 0))].push_back(i);
  }
  for (int c = 0; c < n_classes; ++c) {
    if (members[static_cast<std::size_t>(c)].size() < 2) {
      throw InputError(std::string(who) + ": class " + std::to_string(c) +
                       " has fewer than 2 samples");
    }
  }
  return members;
}

}  // namespace

// ---------------------------------------------------------------------------
// PCA / KPCA

PcaModel fit_pca(const Matrix& x_centered, int k) {
  require_finite(x_centered, "feature matrix");
  PcaModel model;
  const SymmetricEigen eig = eigh_descending(x_centered.transpose() * x_centered);
  model.eigenvalues = eig.eigenvalues;
  const Eigen::Index kk =
      clamp_components(k, numerical_rank(eig.eigenvalues), model.warnings, "fit_pca");
  model.projector = eig.eigenvectors.leftCols(kk);
  model.scores = x_centered * model.projector;
  const Vector signs = canonicalize_column_signs(model.scores);
  model.projector = model.projector * signs.asDiagonal();
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& x_centered) {
  if (x_centered.cols() != model.projector.rows()) {
    throw InputError("pca_transform: feature count mismatch");
  }
  return x_centered * model.projector;
}

Matrix pca_inverse_transform(const PcaModel& model, const Matrix& scores) {
  if (scores.cols() != model.projector.cols()) {
    throw InputError("pca_inverse_transform: component count mismatch");
  }
  return scores * model.projector.transpose();
}

KpcaModel fit_kpca(const Matrix& k_centered, int k) {
  require_finite(k_centered, "kernel matrix");
  KpcaModel model;
  const SymmetricEigen eig = eigh_descending(k_centered);
  model.eigenvalues = eig.eigenvalues;
  const Eigen::Index kk =
      clamp_components(k, numerical_rank(eig.eigenvalues), model.warnings, "fit_kpca");
  const Vector lam = eig.eigenvalues.head(kk);
  model.coefficients = eig.eigenvectors.leftCols(kk) * lam.array().rsqrt().matrix().asDiagonal();
  model.scores = eig.eigenvectors.leftCols(kk) * lam.array().sqrt().matrix().asDiagonal();
  const Vector signs = canonicalize_column_signs(model.scores);
  model.coefficients = model.coefficients * signs.asDiagonal();
  return model;
}

Matrix kpca_transform(const KpcaModel& model, const Matrix& k_cross_centered) {
  if (k_cross_centered.cols() != model.coefficients.rows()) {
    throw InputError("kpca_transform: kernel column count mismatch");
  }
  return k_cross_centered * model.coefficients;
}

// ---------------------------------------------------------------------------
// LDA / KDA

LdaModel fit_lda(const Matrix& x, const LabelData& y, int k) {
  require_finite(x, "feature matrix");
  if (x.rows() != y.n_samples()) throw InputError("fit_lda: row count mismatch");
  const auto members = class_members(y, "fit_lda");
  const auto n_classes = static_cast<Eigen::Index>(members.size());
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  if (k < 1) throw InputError("fit_lda: k must be at least 1");
  const Eigen::Index kk = std::min<Eigen::Index>(k, n_classes - 1);

  LdaModel model;
  model.overall_mean = x.colwise().mean();
  model.class_means.resize(n_classes, f);
  model.priors.resize(n_classes);
  model.within_scatter = Matrix::Zero(f, f);
  model.between_scatter = Matrix::Zero(f, f);
  for (Eigen::Index c = 0; c < n_classes; ++c) {
    const auto& idx = members[static_cast<std::size_t>(c)];
    Matrix xc(static_cast<Eigen::Index>(idx.size()), f);
    for (std::size_t i = 0; i < idx.size(); ++i) xc.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    const RowVector mean = xc.colwise().mean();
    model.class_means.row(c) = mean;
    model.priors(c) = static_cast<double>(idx.size()) / static_cast<double>(n);
    const Matrix dev = xc.rowwise() - mean;
    model.within_scatter.noalias() += dev.transpose() * dev;
    const RowVector shift = mean - model.overall_mean;
    model.between_scatter.noalias() += static_cast<double>(idx.size()) * shift.transpose() * shift;
  }

  const double tr = model.within_scatter.trace();
  model.shrinkage = tr > 0.0 ? 1e-8 * tr / static_cast<double>(f) : 1e-8;
  Matrix regularized = model.within_scatter;
  regularized.diagonal().array() += model.shrinkage;

  const GeneralizedEigen ge = generalized_eigen(model.between_scatter, regularized);
  model.eigenvalues = ge.eigenvalues.head(n_classes - 1);
  model.projector = ge.vectors.leftCols(kk);
  canonicalize_column_signs(model.projector);

  const double dof = static_cast<double>(std::max<Eigen::Index>(n - n_classes, 1));
  model.precision = dof * regularized.ldlt().solve(Matrix::Identity(f, f));
  return model;
}

Matrix lda_transform(const LdaModel& model, const Matrix& x) {
  if (x.cols() != model.projector.rows()) throw InputError("lda_transform: feature count mismatch");
  return (x.rowwise() - model.overall_mean) * model.projector;
}

IndexVector lda_predict(const LdaModel& model, const Matrix& x) {
  if (x.cols() != model.projector.rows()) throw InputError("lda_predict: feature count mismatch");
  const Matrix pm = model.precision * model.class_means.transpose();  // f × c
  Vector offset(model.class_means.rows());
  for (Eigen::Index c = 0; c < offset.size(); ++c) {
    offset(c) = -0.5 * model.class_means.row(c).dot(pm.col(c)) + std::log(model.priors(c));
  }
  const Matrix scores = (x * pm).rowwise() + offset.transpose();
  return activate_matrix(scores);
}

KdaModel fit_kda(const Matrix& k_centered, const LabelData& y, int k) {
  require_finite(k_centered, "kernel matrix");
  const Eigen::Index n = k_centered.rows();
  if (k_centered.cols() != n || y.n_samples() != n) {
    throw InputError("fit_kda: kernel must be square with one row per label");
  }
  const auto members = class_members(y, "fit_kda");
  const auto n_classes = static_cast<Eigen::Index>(members.size());
  if (k < 1) throw InputError("fit_kda: k must be at least 1");
  const Eigen::Index kk = std::min<Eigen::Index>(k, n_classes - 1);

  // Columns of K are the kernel-space feature vectors of the training samples.
  const Vector overall = k_centered.rowwise().mean();
  Matrix within = Matrix::Zero(n, n);
  Matrix between = Matrix::Zero(n, n);
  for (const auto& idx : members) {
    Matrix kc(n, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) kc.col(static_cast<Eigen::Index>(i)) = k_centered.col(idx[i]);
    const Vector mean = kc.rowwise().mean();
    const Matrix dev = kc.colwise() - mean;
    within.noalias() += dev * dev.transpose();
    const Vector shift = mean - overall;
    between.noalias() += static_cast<double>(idx.size()) * shift * shift.transpose();
  }

  KdaModel model;
  const double tr = within.trace();
  model.shrinkage = tr > 0.0 ? 1e-8 * tr / static_cast<double>(n) : 1e-8;
  within.diagonal().array() += model.shrinkage;
  const GeneralizedEigen ge = generalized_eigen(between, within);
  model.eigenvalues = ge.eigenvalues.head(n_classes - 1);
  model.coefficients = ge.vectors.leftCols(kk);
  model.scores = k_centered * model.coefficients;
  const Vector signs = canonicalize_column_signs(model.scores);
  model.coefficients = model.coefficients * signs.asDiagonal();
  return model;
}

Matrix kda_transform(const KdaModel& model, const Matrix& k_cross_centered) {
  if (k_cross_centered.cols() != model.coefficients.rows()) {
    throw InputError("kda_transform: kernel column count mismatch");
  }
  return k_cross_centered * model.coefficients;
}

// ---------------------------------------------------------------------------
// SHAP

ShapResult exact_shap(const RowEvaluator& model, const Vector& x, const Matrix& background) {
  const Eigen::Index n = x.size();
  if (n == 0) throw InputError("exact_shap: sample has no features");
  if (n > kMaxExactShapFeatures) {
    throw InputError("exact_shap: " + std::to_string(n) + " features exceed the exhaustive budget of " +
                     std::to_string(kMaxExactShapFeatures));
  }
  if (background.cols() != n || background.rows() == 0) {
    throw InputError("exact_shap: background must be a non-empty matrix with matching features");
  }
  require_finite(background, "background");
  if (!x.allFinite()) throw InputError("exact_shap: sample contains non-finite entries");

  const Vector fill = background.colwise().mean().transpose();
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> value(subsets);
  Vector z(n);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    for (Eigen::Index j = 0; j < n; ++j) z(j) = (mask >> j) & 1U ? x(j) : fill(j);
    value[mask] = model(z);
  }

  // |S|!(n−|S|−1)!/n! for |S| = 0..n−1.
  std::vector<double> weight(static_cast<std::size_t>(n));
  std::vector<double> factorial(static_cast<std::size_t>(n) + 1, 1.0);
  for (std::size_t i = 1; i < factorial.size(); ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);
  for (Eigen::Index s = 0; s < n; ++s) {
    weight[static_cast<std::size_t>(s)] =
        factorial[static_cast<std::size_t>(s)] * factorial[static_cast<std::size_t>(n - s - 1)] /
        factorial[static_cast<std::size_t>(n)];
  }

  ShapResult out;
  out.values = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      acc += weight[size] * (value[mask | bit] - value[mask]);
    }
    out.values(i) = acc;
  }
  out.base_value = value.front();
  out.model_output = value.back();
  return out;
}

}  // namespace pcov
