#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "pcov/baselines.hpp"
#include "pcov/error.hpp"

using namespace pcov;

TEST_CASE("PCA projector matches the SVD") {
  Rng rng(51);
  Matrix x = oracle::random_matrix(rng, 30, 4);
  x.col(0) *= 4.0;
  x = x.rowwise() - x.colwise().mean();
  const PcaModel m = fit_pca(x, 2);
  const Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinV);
  CHECK(oracle::max_dev_up_to_sign(m.projector, svd.matrixV().leftCols(2)) < 1e-10);
  CHECK((m.eigenvalues.head(2) - svd.singularValues().head(2).array().square().matrix()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((pca_transform(m, x) - m.scores).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("LDA solves the generalized eigenproblem") {
  Rng rng(52);
  const Eigen::Index n = 90, f = 4;
  Matrix x = oracle::random_matrix(rng, n, f);
  std::vector<int> yv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    yv[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
    x(i, 0) += 2.0 * (i % 3);
    x(i, 1) -= 1.5 * ((i % 3) == 1);
  }
  const LabelData y = LabelData::single(yv);
  const LdaModel m = fit_lda(x, y, 2);

  // Scatter matrices by explicit loops.
  Matrix means = Matrix::Zero(3, f);
  Vector counts = Vector::Zero(3);
  for (Eigen::Index i = 0; i < n; ++i) {
    means.row(yv[static_cast<std::size_t>(i)]) += x.row(i);
    counts(yv[static_cast<std::size_t>(i)]) += 1;
  }
  for (int c = 0; c < 3; ++c) means.row(c) /= counts(c);
  const Eigen::RowVectorXd overall = x.colwise().mean();
  Matrix sw = Matrix::Zero(f, f), sb = Matrix::Zero(f, f);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd d = x.row(i) - means.row(yv[static_cast<std::size_t>(i)]);
    sw += d.transpose() * d;
  }
  for (int c = 0; c < 3; ++c) {
    const Eigen::RowVectorXd d = means.row(c) - overall;
    sb += counts(c) * d.transpose() * d;
  }
  CHECK((m.within_scatter - sw).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((m.between_scatter - sb).cwiseAbs().maxCoeff() < 1e-10);

  const Matrix swe = sw + m.shrinkage * Matrix::Identity(f, f);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(sb, swe);
  const Vector ref = ges.eigenvalues().reverse();
  CHECK((m.eigenvalues.head(2) - ref.head(2)).cwiseAbs().maxCoeff() < 1e-8 * ref(0));
  for (Eigen::Index j = 0; j < 2; ++j) {
    const Vector p = m.projector.col(j);
    CHECK((sb * p - ref(j) * swe * p).norm() < 1e-8 * ref(0) * p.norm() * swe.norm());
  }
  CHECK(accuracy(y.column(0), lda_predict(m, x)) > 0.8);
}

TEST_CASE("LDA caps components at classes minus one") {
  Rng rng(53);
  const Matrix x = oracle::random_matrix(rng, 20, 3);
  std::vector<int> y(20);
  for (int i = 0; i < 20; ++i) y[static_cast<std::size_t>(i)] = i % 2;
  CHECK(fit_lda(x, LabelData::single(y), 2).n_components() == 1);
}

TEST_CASE("kernel PCA scores follow the eigendecomposition") {
  Rng rng(54);
  const Matrix b = oracle::random_matrix(rng, 10, 3);
  Matrix k = b * b.transpose();
  const Matrix h = Matrix::Identity(10, 10) - Matrix::Constant(10, 10, 0.1);
  k = h * k * h;
  const KpcaModel m = fit_kpca(k, 2);
  CHECK((kpca_transform(m, k) - m.scores).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((m.scores.transpose() * m.scores).diagonal().isApprox(m.eigenvalues.head(2), 1e-10));
}

TEST_CASE("exact SHAP is additive and matches the permutation oracle") {
  Rng rng(55);
  const Matrix bg = oracle::random_matrix(rng, 20, 4);
  const Vector x = oracle::random_matrix(rng, 4, 1);
  const RowEvaluator f = [](const Vector& v) { return v(0) * v(1) + std::sin(v(2)) - v(3) * v(3) * v(0); };
  const ShapResult r = exact_shap(f, x, bg);
  CHECK(r.values.sum() + r.base_value == doctest::Approx(r.model_output).epsilon(1e-12));
  CHECK((r.values - oracle::permutation_shap(f, x, bg)).cwiseAbs().maxCoeff() < 1e-12);
  const RowEvaluator lin = [](const Vector& v) { return 2 * v(0) - v(1) + 0.5 * v(3) + 7; };
  const ShapResult rl = exact_shap(lin, x, bg);
  const Vector mean = bg.colwise().mean().transpose();
  CHECK(rl.values(0) == doctest::Approx(2 * (x(0) - mean(0))));
  CHECK(rl.values(2) == doctest::Approx(0.0));
}

TEST_CASE("exact SHAP refuses too many features") {
  Rng rng(56);
  const Matrix bg = oracle::random_matrix(rng, 3, kMaxExactShapFeatures + 1);
  const Vector x = Vector::Zero(kMaxExactShapFeatures + 1);
  CHECK_THROWS_AS(exact_shap([](const Vector&) { return 0.0; }, x, bg), InputError);
}

TEST_CASE("PCA of points on a line") {
  Matrix x(5, 2);
  for (int i = 0; i < 5; ++i) x.row(i) << i - 2.0, 2.0 * (i - 2.0);
  const PcaModel m = fit_pca(x, 2);
  CHECK(std::abs(m.projector(1, 0) / m.projector(0, 0) - 2.0) < 1e-12);
  CHECK(std::abs(m.eigenvalues(1)) < 1e-12 * m.eigenvalues(0));
  CHECK((pca_inverse_transform(m, m.scores) - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-class LDA follows the inverse-covariance mean difference") {
  Rng rng(57);
  const Eigen::Index n = 400;
  Matrix x(n, 2);
  std::vector<int> y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    y[static_cast<std::size_t>(i)] = c;
    const double u = rng.normal(), v = rng.normal();
    x(i, 0) = 2.0 * u + 0.5 * v + 4.0 * c;
    x(i, 1) = 0.5 * u + 1.0 * v + 1.0 * c;
  }
  const LdaModel m = fit_lda(x, LabelData::single(y), 1);
  CHECK(m.n_components() == 1);
  const Vector d = (m.class_means.row(1) - m.class_means.row(0)).transpose();
  const Vector dir = (m.within_scatter + m.shrinkage * Matrix::Identity(2, 2)).ldlt().solve(d);
  const Vector p = m.projector.col(0);
  CHECK(std::abs(p.dot(dir)) / (p.norm() * dir.norm()) > 0.99);
}

TEST_CASE("SHAP symmetry and null-feature axioms") {
  Rng rng(58);
  Matrix bg = oracle::random_matrix(rng, 15, 3);
  bg.col(1) = bg.col(0);
  Vector x(3);
  x << 0.7, 0.7, -1.2;
  const RowEvaluator f = [](const Vector& v) { return 1.5 * v(0) + 1.5 * v(1) + std::tanh(v(0) * v(1)); };
  const ShapResult r = exact_shap(f, x, bg);
  CHECK(r.values(0) == doctest::Approx(r.values(1)).epsilon(1e-12));
  CHECK(std::abs(r.values(2)) < 1e-15);
}

TEST_CASE("kernel discriminant scores are finite and reproducible out of sample") {
  Rng rng(59);
  const Matrix x = oracle::random_matrix(rng, 30, 2);
  std::vector<int> y(30);
  for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = i % 3;
  const Matrix k = x * x.transpose();
  const Matrix h = Matrix::Identity(30, 30) - Matrix::Constant(30, 30, 1.0 / 30);
  const Matrix kc = h * k * h;
  const KdaModel m = fit_kda(kc, LabelData::single(y), 2);
  CHECK(m.scores.cols() == 2);
  CHECK(m.scores.allFinite());
  CHECK((kda_transform(m, kc) - m.scores).cwiseAbs().maxCoeff() < 1e-10);
}
