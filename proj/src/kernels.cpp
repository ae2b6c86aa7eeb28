#include "pcov/kernels.hpp"

#include <cmath>
#include <string>

#include "pcov/error.hpp"

namespace pcov {

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Linear: return "linear";
    case KernelFamily::Rbf: return "rbf";
    case KernelFamily::Polynomial: return "polynomial";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "linear") return KernelFamily::Linear;
  if (name == "rbf") return KernelFamily::Rbf;
  if (name == "polynomial" || name == "poly") return KernelFamily::Polynomial;
  throw InputError("unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  if (gamma && (!(*gamma > 0.0) || !std::isfinite(*gamma))) {
    throw InputError("kernel gamma must be a finite positive number");
  }
  if (family == KernelFamily::Polynomial && degree < 1) {
    throw InputError("polynomial kernel degree must be at least 1");
  }
  if (!std::isfinite(coef0)) throw InputError("kernel coef0 must be finite");
}

double KernelSpec::resolved_gamma(Eigen::Index n_features) const {
  if (gamma) return *gamma;
  return 1.0 / static_cast<double>(std::max<Eigen::Index>(n_features, 1));
}

KernelMatrix compute_kernel(const Matrix& rows, const Matrix& train, const KernelSpec& spec) {
  spec.validate();
  if (rows.cols() != train.cols()) {
    throw InputError("kernel inputs have " + std::to_string(rows.cols()) + " and " +
                     std::to_string(train.cols()) + " features");
  }
  require_finite(rows, "kernel rows");
  require_finite(train, "kernel training rows");

  KernelMatrix out;
  const double gamma = spec.resolved_gamma(train.cols());
  switch (spec.family) {
    case KernelFamily::Linear:
      out.values = rows * train.transpose();
      break;
    case KernelFamily::Rbf: {
      // Direct differences keep identical rows at exactly zero distance.
      out.values.resize(rows.rows(), train.rows());
      for (Eigen::Index j = 0; j < train.rows(); ++j) {
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
          out.values(i, j) = std::exp(-gamma * (rows.row(i) - train.row(j)).squaredNorm());
        }
      }
      break;
    }
    case KernelFamily::Polynomial:
      out.values = (gamma * (rows * train.transpose()).array() + spec.coef0).pow(spec.degree).matrix();
      break;
  }
  require_finite(out.values, "kernel matrix");
  return out;
}

KernelMatrix center_kernel(const KernelMatrix& k) {
  if (k.values.rows() != k.values.cols()) {
    throw InputError("out-of-sample kernel centering needs training statistics");
  }
  KernelCentering stats;
  stats.column_means = k.values.colwise().mean();
  stats.grand_mean = stats.column_means.mean();
  KernelMatrix out = center_kernel(k, stats);
  // Exact symmetry for the training case.
  out.values = 0.5 * (out.values + out.values.transpose()).eval();
  return out;
}

KernelMatrix center_kernel(const KernelMatrix& k, const KernelCentering& training) {
  if (k.values.cols() != training.column_means.size()) {
    throw InputError("kernel has " + std::to_string(k.values.cols()) +
                     " columns but training statistics cover " +
                     std::to_string(training.column_means.size()));
  }
  KernelMatrix out;
  const Vector row_means = k.values.rowwise().mean();
  out.values = k.values;
  out.values.rowwise() -= training.column_means;
  out.values.colwise() -= row_means;
  out.values.array() += training.grand_mean;
  out.is_centered = true;
  out.training_stats = training;
  return out;
}

}  // namespace pcov
