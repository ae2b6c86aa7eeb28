#include "doctest.h"

#include "oracles.hpp"
#include "pcov/error.hpp"
#include "pcov/linalg.hpp"

using namespace pcov;

TEST_CASE("eigh_descending matches power iteration with deflation") {
  Rng rng(1);
  for (int n = 1; n <= 8; ++n) {
    const Matrix a = oracle::random_symmetric(rng, n);
    const SymmetricEigen e = eigh_descending(a);
    const Vector ref = oracle::power_deflation_eigenvalues(a);
    CHECK((e.eigenvalues - ref).cwiseAbs().maxCoeff() < 1e-8);
    // A·v = λ·v and orthonormal columns.
    CHECK((a * e.eigenvectors - e.eigenvectors * e.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("eigenvector signs put the largest entry positive") {
  Rng rng(2);
  const SymmetricEigen e = eigh_descending(oracle::random_symmetric(rng, 6));
  for (Eigen::Index j = 0; j < 6; ++j) {
    Eigen::Index r = 0;
    e.eigenvectors.col(j).cwiseAbs().maxCoeff(&r);
    CHECK(e.eigenvectors(r, j) > 0.0);
  }
  Matrix tie(2, 1);
  tie << -0.5, 0.5;
  canonicalize_column_signs(tie);
  CHECK(tie(0, 0) > 0.0);
}

TEST_CASE("eigh_descending rejects bad input") {
  Matrix asym(2, 2);
  asym << 1, 2, 0, 1;
  CHECK_THROWS_AS(eigh_descending(asym), InputError);
  CHECK_THROWS_AS(eigh_descending(Matrix(2, 3)), InputError);
  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 0) = std::nan("");
  CHECK_THROWS_AS(eigh_descending(nan), InputError);
}

TEST_CASE("psd_power inverts and square-roots on the range") {
  Rng rng(3);
  const Matrix b = oracle::random_matrix(rng, 5, 3);
  const Matrix a = b * b.transpose();  // rank 3
  const Matrix half = psd_power(a, 0.5);
  CHECK((half * half - a).cwiseAbs().maxCoeff() < 1e-10);
  const Matrix pinv = psd_power(a, -1.0);
  CHECK((a * pinv * a - a).cwiseAbs().maxCoeff() < 1e-9);
  const Matrix full = b.transpose() * b;
  CHECK((psd_power(full, -1.0) * full - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(numerical_rank(eigh_descending(a).eigenvalues) == 3);
}

TEST_CASE("scaling recipe round trips and normalizes the trace") {
  Rng rng(4);
  Matrix x = oracle::random_matrix(rng, 40, 4);
  x.col(1) *= 10.0;
  x.col(2).array() += 5.0;
  for (bool standardize : {false, true}) {
    const ScaledData s = center_and_scale(x, standardize, true);
    CHECK(s.values.squaredNorm() == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(s.values.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.recipe.apply(x) - s.values).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.recipe.invert(s.values) - x).cwiseAbs().maxCoeff() < 1e-10);
  }
  const ScaledData plain = center_and_scale(x, false, true);
  CHECK((plain.values - oracle::trace_normalized(x)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant columns keep unit scale when standardizing") {
  Matrix x(3, 2);
  x << 1, 7, 2, 7, 3, 7;
  const ScaledData s = center_and_scale(x, true);
  CHECK(s.recipe.column_scales(1) == 1.0);
  CHECK(s.values.col(1).isZero());
}

TEST_CASE("pearson correlation") {
  Vector a(5), b(5), c(5);
  a << 1, 2, 3, 4, 5;
  b << 2, 4, 6, 8, 10;
  c << 3, 3, 3, 3, 3;
  CHECK(*pearson_correlation(a, b) == doctest::Approx(1.0));
  CHECK(*pearson_correlation(a, -b) == doctest::Approx(-1.0));
  CHECK_FALSE(pearson_correlation(a, c).has_value());
  Vector d(5);
  d << 2, 1, 4, 3, 5;
  // Σ(a-ā)(d-d̄) = 8, Σ(a-ā)² = Σ(d-d̄)² = 10.
  CHECK(*pearson_correlation(a, d) == doctest::Approx(0.8));
}

TEST_CASE("small closed-form decompositions") {
  const SymmetricEigen id = eigh_descending(Matrix::Identity(2, 2));
  CHECK(id.eigenvalues == Vector::Ones(2));
  CHECK((id.eigenvectors.transpose() * id.eigenvectors - Matrix::Identity(2, 2)).norm() < 1e-15);

  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  const SymmetricEigen e = eigh_descending(a);
  CHECK(e.eigenvalues(0) == doctest::Approx(3.0));
  CHECK(e.eigenvalues(1) == doctest::Approx(1.0));
  CHECK(e.eigenvectors(0, 0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(e.eigenvectors(1, 0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(std::abs(e.eigenvectors(0, 1) + e.eigenvectors(1, 1)) < 1e-15);
  CHECK((e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose() - a).norm() < 1e-8 * a.norm());

  CHECK((psd_power(Matrix::Identity(3, 3), -0.5) - Matrix::Identity(3, 3)).norm() < 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4, 9;
  const Matrix r = psd_power(d, 0.5);
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(r(0, 1)) < 1e-15);

  Matrix two(2, 1);
  two << 1, 3;
  const ScaledData s = center_and_scale(two, false);
  CHECK(s.values(0, 0) == -1.0);
  CHECK(s.values(1, 0) == 1.0);
  CHECK(s.recipe.column_means(0) == 2.0);
}
