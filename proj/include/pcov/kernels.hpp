#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pcov/linalg.hpp"

namespace pcov {

enum class KernelFamily { Linear, Rbf, Polynomial };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Kernel family and hyperparameters.
///
/// rbf:        exp(-gamma·‖x - y‖²)
/// polynomial: (gamma·⟨x, y⟩ + coef0)^degree
/// An unset gamma resolves to 1 / n_features at evaluation time.
struct KernelSpec {
  KernelFamily family = KernelFamily::Linear;
  std::optional<double> gamma;
  int degree = 3;
  double coef0 = 1.0;

  void validate() const;
  double resolved_gamma(Eigen::Index n_features) const;
};

/// Centering statistics of a training kernel, kept for out-of-sample rows.
struct KernelCentering {
  RowVector column_means;  // mean of each training column
  double grand_mean = 0.0;
};

struct KernelMatrix {
  Matrix values;  // n_rows × n_train
  bool is_centered = false;
  std::optional<KernelCentering> training_stats;
};

/// Kernel between every row of `rows` and every row of `train`.
KernelMatrix compute_kernel(const Matrix& rows, const Matrix& train, const KernelSpec& spec);

/// Double-centers a square training kernel and records its statistics.
KernelMatrix center_kernel(const KernelMatrix& k);

/// Centers a rectangular out-of-sample kernel with training statistics.
KernelMatrix center_kernel(const KernelMatrix& k, const KernelCentering& training);

}  // namespace pcov
