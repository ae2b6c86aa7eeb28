#pragma once

// Slow, independent reference computations used to derive expected values.
// None of these call into the library's numerical routines.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "pcov/random.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(pcov::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

inline Matrix random_symmetric(pcov::Rng& rng, Eigen::Index n) {
  const Matrix a = random_matrix(rng, n, n);
  return 0.5 * (a + a.transpose());
}

/// Gaussian elimination with partial pivoting; solves a·x = b.
inline Vector gauss_solve(Matrix a, Vector b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = k;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    }
    a.row(k).swap(a.row(p));
    std::swap(b(k), b(p));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b(i) -= f * b(k);
    }
  }
  Vector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double s = b(i);
    for (Eigen::Index j = i + 1; j < n; ++j) s -= a(i, j) * x(j);
    x(i) = s / a(i, i);
  }
  return x;
}

inline Matrix gauss_solve(const Matrix& a, const Matrix& b) {
  Matrix x(a.cols(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) x.col(j) = gauss_solve(a, Vector(b.col(j)));
  return x;
}

/// Eigenvalues of a symmetric matrix, descending, by shifted power iteration
/// with Hotelling deflation. Each vector is polished with Rayleigh-quotient
/// inverse iteration.
inline Vector power_deflation_eigenvalues(const Matrix& a) {
  const Eigen::Index n = a.rows();
  const double shift = a.norm() + 1.0;
  Matrix b = a + shift * Matrix::Identity(n, n);  // positive definite
  Vector values(n);
  pcov::Rng rng(12345);
  for (Eigen::Index k = 0; k < n; ++k) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    v.normalize();
    double mu = v.dot(b * v);
    for (int it = 0; it < 20000; ++it) {
      Vector w = b * v;
      const double norm = w.norm();
      if (norm == 0.0) break;
      w /= norm;
      const double next = w.dot(b * w);
      const bool done = std::abs(next - mu) <= 1e-15 * std::abs(next) && (w - v).norm() < 1e-9;
      v = w;
      mu = next;
      if (done) break;
    }
    for (int it = 0; it < 3; ++it) {
      Matrix shifted = b - (mu + 1e-13 * std::max(1.0, std::abs(mu))) * Matrix::Identity(n, n);
      Vector w = gauss_solve(shifted, v);
      if (!w.allFinite() || w.norm() == 0.0) break;
      w.normalize();
      v = w;
      mu = v.dot(b * v);
    }
    values(k) = mu - shift;
    b -= mu * v * v.transpose();
  }
  std::sort(values.data(), values.data() + n, std::greater<>());
  return values;
}

/// (ZZᵀ)ᵢⱼ = Σ_c Σ_l z[l](i,c)·z[l](j,c) over a zero-padded tensor, classes
/// outer and labels inner.
inline Matrix triple_loop_gram(const std::vector<Matrix>& per_label) {
  const Eigen::Index n = per_label.front().rows();
  Eigen::Index width = 0;
  for (const auto& z : per_label) width = std::max(width, z.cols());
  std::vector<double> padded(static_cast<std::size_t>(n * width) * per_label.size(), 0.0);
  const auto at = [&](Eigen::Index i, Eigen::Index c, std::size_t l) -> double& {
    return padded[(static_cast<std::size_t>(i * width + c)) * per_label.size() + l];
  };
  for (std::size_t l = 0; l < per_label.size(); ++l) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < per_label[l].cols(); ++c) at(i, c, l) = per_label[l](i, c);
    }
  }
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < width; ++c) {
        for (std::size_t l = 0; l < per_label.size(); ++l) acc += at(i, c, l) * at(j, c, l);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

/// Shapley values as the average marginal contribution over every feature
/// ordering, with absent features set to their background mean.
inline Vector permutation_shap(const std::function<double(const Vector&)>& f, const Vector& x,
                               const Matrix& background) {
  const Eigen::Index n = x.size();
  const Vector mean = background.colwise().mean().transpose();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Vector phi = Vector::Zero(n);
  long count = 0;
  do {
    Vector z = mean;
    double prev = f(z);
    for (int j : order) {
      z(j) = x(j);
      const double cur = f(z);
      phi(j) += cur - prev;
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  return phi / static_cast<double>(count);
}

struct Pair {
  Eigen::Index a;
  Eigen::Index b;
  double distance;
};

/// Every (class_a, class_b) pair, distances computed with an explicit loop,
/// sorted by (distance, a, b).
inline std::vector<Pair> brute_force_pairs(const Matrix& t, const Eigen::VectorXi& labels,
                                           int class_a, int class_b, int d) {
  std::vector<Pair> pairs;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    if (labels(i) != class_a) continue;
    for (Eigen::Index j = 0; j < t.rows(); ++j) {
      if (labels(j) != class_b) continue;
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += (t(i, k) - t(j, k)) * (t(i, k) - t(j, k));
      pairs.push_back({i, j, std::sqrt(s)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& p, const Pair& q) {
    if (p.distance != q.distance) return p.distance < q.distance;
    if (p.a != q.a) return p.a < q.a;
    return p.b < q.b;
  });
  return pairs;
}

/// Best accuracy of any linear threshold rule on 2-D points: every direction
/// on a fine angular grid, every cut between sorted projections, both
/// orientations.
inline double best_linear_accuracy_2d(const Matrix& x, const Eigen::VectorXi& y, int n_angles = 7200) {
  const Eigen::Index n = x.rows();
  double best = 0.0;
  std::vector<std::pair<double, int>> proj(static_cast<std::size_t>(n));
  for (int a = 0; a < n_angles; ++a) {
    const double th = M_PI * a / n_angles;
    const double c = std::cos(th);
    const double s = std::sin(th);
    int total_pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      proj[static_cast<std::size_t>(i)] = {c * x(i, 0) + s * x(i, 1), y(i)};
      total_pos += y(i);
    }
    std::sort(proj.begin(), proj.end());
    // Predict 1 above the cut: correct = negatives below + positives above.
    int neg_below = 0;
    int pos_below = 0;
    for (Eigen::Index k = 0; k <= n; ++k) {
      if (k == 0 || k == n || proj[static_cast<std::size_t>(k - 1)].first != proj[static_cast<std::size_t>(k)].first) {
        const int correct = neg_below + (total_pos - pos_below);
        const double acc = static_cast<double>(std::max<long>(correct, n - correct)) / static_cast<double>(n);
        best = std::max(best, acc);
      }
      if (k < n) (proj[static_cast<std::size_t>(k)].second ? pos_below : neg_below)++;
    }
  }
  return best;
}

/// Centered feature matrix scaled so that trace(XXᵀ) = n_samples.
inline Matrix trace_normalized(const Matrix& x) {
  Matrix c = x.rowwise() - x.colwise().mean();
  const double scale = std::sqrt(c.squaredNorm() / static_cast<double>(x.rows()));
  return c / scale;
}

/// Max over columns of min(|a - b|, |a + b|) deviation.
inline double max_dev_up_to_sign(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double plus = (a.col(j) - b.col(j)).cwiseAbs().maxCoeff();
    const double minus = (a.col(j) + b.col(j)).cwiseAbs().maxCoeff();
    worst = std::max(worst, std::min(plus, minus));
  }
  return worst;
}

}  // namespace oracle
