#include "pcov/pcov.hpp"

#include <cmath>
#include <string>

#include "pcov/error.hpp"

namespace pcov {

std::string_view to_string(Route route) {
  switch (route) {
    case Route::Auto: return "auto";
    case Route::SampleSpace: return "sample-space";
    case Route::FeatureSpace: return "feature-space";
  }
  return "unknown";
}

std::string_view to_string(Mode mode) {
  return mode == Mode::Regression ? "regression" : "classification";
}

Route parse_route(std::string_view name) {
  if (name == "auto") return Route::Auto;
  if (name == "sample-space" || name == "sample") return Route::SampleSpace;
  if (name == "feature-space" || name == "feature") return Route::FeatureSpace;
  throw InputError("unknown route '" + std::string(name) + "'");
}

Mode parse_mode(std::string_view name) {
  if (name == "regression") return Mode::Regression;
  if (name == "classification") return Mode::Classification;
  throw InputError("unknown mode '" + std::string(name) + "'");
}

void PcovConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InputError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (n_components < 1) {
    throw InputError("n_components must be at least 1, got " + std::to_string(n_components));
  }
  if (!(rcond > 0.0 && rcond < 1.0)) throw InputError("rcond must lie in (0, 1)");
  if (!(regression_lambda >= 0.0) || !std::isfinite(regression_lambda)) {
    throw InputError("regression lambda must be a finite nonnegative number");
  }
}

// ---------------------------------------------------------------------------
// Building blocks

namespace {

Matrix regression_weights(const Matrix& x, const Matrix& y, double lambda, double rcond,
                          bool* used_pseudoinverse = nullptr) {
  if (x.rows() != y.rows()) {
    throw InputError("regression: " + std::to_string(x.rows()) + " feature rows but " +
                     std::to_string(y.rows()) + " target rows");
  }
  Matrix gram = x.transpose() * x;
  const Matrix rhs = x.transpose() * y;
  if (lambda > 0.0) {
    gram.diagonal().array() += lambda;
    return gram.ldlt().solve(rhs);
  }
  const SymmetricEigen eig = eigh_descending(gram);
  if (numerical_rank(eig.eigenvalues, rcond) == gram.rows()) return gram.ldlt().solve(rhs);
  if (used_pseudoinverse) *used_pseudoinverse = true;
  return psd_power(gram, -1.0, rcond) * rhs;
}

/// Least-squares fit of targets on the latent projection. Retained latent
/// columns are orthogonal with positive norms, so TᵀT is well conditioned.
Matrix latent_fit(const Matrix& t, const Matrix& targets) {
  return (t.transpose() * t).ldlt().solve(t.transpose() * targets);
}

Eigen::Index resolve_components(const PcovConfig& config, const Vector& eigenvalues,
                                std::vector<std::string>& warnings) {
  const Eigen::Index rank = numerical_rank(eigenvalues, config.rcond);
  if (rank == 0) throw InputError("modified matrix is numerically zero; nothing to project");
  Eigen::Index k = config.n_components;
  if (k > rank) {
    warnings.push_back("n_components=" + std::to_string(k) + " exceeds the " +
                       std::to_string(rank) + " positive eigenvalues; clamped to " +
                       std::to_string(rank));
    k = rank;
  }
  return k;
}

double trace_normalizer(const Matrix& s, Eigen::Index n_samples,
                        std::vector<std::string>& warnings) {
  const double energy = s.squaredNorm();
  if (!(energy > 0.0)) {
    warnings.push_back("target approximation is identically zero; only the feature term "
                       "contributes to the modified matrix");
    return 1.0;
  }
  return std::sqrt(static_cast<double>(n_samples) / energy);
}

struct LatentSolution {
  Route route = Route::FeatureSpace;
  Matrix pxt;
  Matrix ptx;
  Vector eigenvalues;
};

/// Projectors for recipe-scaled features `xs` and a trace-normalized
/// approximation `s = xs·w`. `tensor` (optional) supplies SSᵀ via the
/// multilabel rule on the sample route.
LatentSolution solve_linear(const Matrix& xs, const Matrix& s, const Matrix& w,
                            const EvidenceTensor* tensor, const PcovConfig& config,
                            std::vector<std::string>& warnings) {
  const Eigen::Index n = xs.rows();
  const Eigen::Index f = xs.cols();
  const double alpha = config.alpha;

  LatentSolution out;
  out.route = config.route;
  if (out.route == Route::Auto) out.route = f > n ? Route::SampleSpace : Route::FeatureSpace;

  if (out.route == Route::SampleSpace) {
    const ModifiedMatrix kt = tensor ? modified_gram(xs, *tensor, alpha) : modified_gram(xs, s, alpha);
    const SymmetricEigen eig = eigh_descending(kt.values);
    out.eigenvalues = eig.eigenvalues;
    const Eigen::Index k = resolve_components(config, eig.eigenvalues, warnings);
    const Matrix u = eig.eigenvectors.leftCols(k);
    const Vector inv_sqrt = eig.eigenvalues.head(k).array().rsqrt();
    const Matrix mixed = alpha * xs.transpose() + (1.0 - alpha) * w * s.transpose();
    out.pxt = mixed * u * inv_sqrt.asDiagonal();
    out.ptx = inv_sqrt.asDiagonal() * u.transpose() * xs;
  } else {
    const ModifiedMatrix ct = modified_covariance(xs, s, alpha, config.rcond);
    const SymmetricEigen eig = eigh_descending(ct.values);
    out.eigenvalues = eig.eigenvalues;
    const Eigen::Index k = resolve_components(config, eig.eigenvalues, warnings);
    const Matrix u = eig.eigenvectors.leftCols(k);
    const Vector lam = eig.eigenvalues.head(k);
    const Matrix gram = xs.transpose() * xs;
    out.pxt = psd_power(gram, -0.5, config.rcond) * u * lam.array().sqrt().matrix().asDiagonal();
    out.ptx = lam.array().rsqrt().matrix().asDiagonal() * u.transpose() *
              psd_power(gram, 0.5, config.rcond);
  }
  return out;
}

/// Orient latent columns so each training column's largest entry is positive.
void orient_latent(Matrix& pxt, Matrix& ptx, const Matrix& t_train) {
  Matrix t = t_train;
  const Vector signs = canonicalize_column_signs(t);
  pxt = pxt * signs.asDiagonal();
  ptx = signs.asDiagonal() * ptx;
}

Matrix flat_weights(const std::vector<LinearClassifierModel>& models) {
  Eigen::Index width = 0;
  for (const auto& m : models) width += m.width();
  Matrix w(models.front().n_features(), width);
  Eigen::Index offset = 0;
  for (const auto& m : models) {
    w.middleCols(offset, m.width()) = m.weights;
    offset += m.width();
  }
  return w;
}

EvidenceTensor split_like(const Matrix& flat, const std::vector<int>& classes_per_label) {
  return EvidenceTensor::from_flat(flat, classes_per_label);
}

}  // namespace

Matrix regression_approximation(const Matrix& x, const Matrix& y, double lambda, double rcond) {
  require_finite(x, "feature matrix");
  require_finite(y, "target matrix");
  return x * regression_weights(x, y, lambda, rcond);
}

ModifiedMatrix modified_gram(const Matrix& x, const Matrix& s, double alpha) {
  if (s.rows() != x.rows()) {
    throw InputError("modified_gram: approximation has " + std::to_string(s.rows()) +
                     " rows, features have " + std::to_string(x.rows()));
  }
  require_finite(x, "feature matrix");
  require_finite(s, "target approximation");
  ModifiedMatrix out;
  out.kind = MatrixKind::Gram;
  out.alpha = alpha;
  out.values = alpha * (x * x.transpose());
  if (alpha < 1.0) out.values += (1.0 - alpha) * (s * s.transpose());
  return out;
}

ModifiedMatrix modified_gram(const Matrix& x, const EvidenceTensor& z, double alpha) {
  if (z.n_samples() != x.rows()) {
    throw InputError("modified_gram: evidence has " + std::to_string(z.n_samples()) +
                     " rows, features have " + std::to_string(x.rows()));
  }
  require_finite(x, "feature matrix");
  ModifiedMatrix out;
  out.kind = MatrixKind::Gram;
  out.alpha = alpha;
  out.values = alpha * (x * x.transpose());
  if (alpha < 1.0) out.values += (1.0 - alpha) * multilabel_gram_contribution(z);
  return out;
}

ModifiedMatrix modified_covariance(const Matrix& x, const Matrix& s, double alpha, double rcond) {
  if (s.rows() != x.rows()) {
    throw InputError("modified_covariance: approximation has " + std::to_string(s.rows()) +
                     " rows, features have " + std::to_string(x.rows()));
  }
  require_finite(x, "feature matrix");
  require_finite(s, "target approximation");
  ModifiedMatrix out;
  out.kind = MatrixKind::Covariance;
  out.alpha = alpha;
  const Matrix gram = x.transpose() * x;
  out.values = alpha * gram;
  if (alpha < 1.0) {
    const Matrix inv_sqrt = psd_power(gram, -0.5, rcond);
    const Matrix projected = inv_sqrt * (x.transpose() * s);
    out.values += (1.0 - alpha) * (projected * projected.transpose());
  }
  out.values = 0.5 * (out.values + out.values.transpose()).eval();
  return out;
}

Matrix multilabel_gram_contribution(const EvidenceTensor& z) {
  const Eigen::Index n = z.n_samples();
  int max_width = 0;
  for (const auto& slice : z.per_label) {
    if (slice.rows() != n) throw InputError("evidence slices have inconsistent row counts");
    max_width = std::max(max_width, static_cast<int>(slice.cols()));
  }
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (int c = 0; c < max_width; ++c) {
        for (const auto& slice : z.per_label) {
          if (c < slice.cols()) acc += slice(i, c) * slice(j, c);
        }
      }
      out(i, j) = acc;
      out(j, i) = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear PCovC / PCovR

namespace {

ScaledData prepare_features(const Matrix& x, const PcovConfig& config) {
  config.validate();
  require_finite(x, "feature matrix");
  if (config.n_components > x.rows()) {
    throw InputError("n_components=" + std::to_string(config.n_components) + " exceeds " +
                     std::to_string(x.rows()) + " samples");
  }
  ScaledData scaled = center_and_scale(x, config.standardize, /*normalize_trace=*/true);
  if (scaled.values.squaredNorm() == 0.0) {
    throw InputError("feature matrix is numerically zero after centering");
  }
  return scaled;
}

}  // namespace

PcovModel fit_pcovc(const Matrix& x, const LabelData& y, const PcovConfig& config,
                    const ClassifierSpec& classifier) {
  if (config.mode != Mode::Classification) {
    throw InputError("fit_pcovc requires classification mode");
  }
  if (x.rows() != y.n_samples()) {
    throw InputError("fit_pcovc: " + std::to_string(x.rows()) + " feature rows but " +
                     std::to_string(y.n_samples()) + " label rows");
  }
  ScaledData scaled = prepare_features(x, config);
  const Matrix& xs = scaled.values;

  PcovModel model;
  model.config = config;
  model.recipe = scaled.recipe;
  model.classes_per_label = y.classes_per_label;
  model.classifiers = fit_classifier(xs, y, classifier);
  for (const auto& c : model.classifiers) {
    if (!c.converged) {
      model.warnings.push_back(std::string(to_string(c.family)) +
                               " classifier did not converge within its iteration budget");
    }
  }

  const Matrix raw = evidence(model.classifiers, xs).flattened();
  model.target_offset = raw.colwise().mean();
  const Matrix centered = raw.rowwise() - model.target_offset;
  const Matrix w = flat_weights(model.classifiers);

  model.target_scale = trace_normalizer(centered, xs.rows(), model.warnings);
  const Matrix s = model.target_scale * centered;
  const EvidenceTensor tensor = split_like(s, y.classes_per_label);
  LatentSolution sol =
      solve_linear(xs, s, model.target_scale * w, &tensor, config, model.warnings);

  model.route_used = sol.route;
  model.eigenvalues = sol.eigenvalues;
  orient_latent(sol.pxt, sol.ptx, xs * sol.pxt);
  model.pxt = std::move(sol.pxt);
  model.ptx = std::move(sol.ptx);
  model.training_latent = transform(model, x);
  model.ptz = latent_fit(model.training_latent, centered);
  return model;
}

PcovModel fit_pcovr(const Matrix& x, const Matrix& y, const PcovConfig& config) {
  if (config.mode != Mode::Regression) throw InputError("fit_pcovr requires regression mode");
  if (x.rows() != y.rows()) {
    throw InputError("fit_pcovr: " + std::to_string(x.rows()) + " feature rows but " +
                     std::to_string(y.rows()) + " target rows");
  }
  require_finite(y, "target matrix");
  ScaledData scaled = prepare_features(x, config);
  const Matrix& xs = scaled.values;

  PcovModel model;
  model.config = config;
  model.recipe = scaled.recipe;
  model.target_offset = y.colwise().mean();
  const Matrix yc = y.rowwise() - model.target_offset;
  bool pinv = false;
  model.regression_weights = regression_weights(xs, yc, config.regression_lambda, config.rcond, &pinv);
  if (pinv) model.warnings.push_back("X^T X is rank deficient; used the pseudoinverse");
  const Matrix yhat = xs * model.regression_weights;

  model.target_scale = trace_normalizer(yhat, xs.rows(), model.warnings);
  LatentSolution sol = solve_linear(xs, model.target_scale * yhat,
                                    model.target_scale * model.regression_weights, nullptr,
                                    config, model.warnings);

  model.route_used = sol.route;
  model.eigenvalues = sol.eigenvalues;
  orient_latent(sol.pxt, sol.ptx, xs * sol.pxt);
  model.pxt = std::move(sol.pxt);
  model.ptx = std::move(sol.ptx);
  model.training_latent = transform(model, x);
  model.ptz = latent_fit(model.training_latent, yhat);
  return model;
}

Matrix transform(const PcovModel& model, const Matrix& x) {
  return model.recipe.apply(x) * model.pxt;
}

Matrix inverse_transform(const PcovModel& model, const Matrix& t) {
  if (t.cols() != model.n_components()) {
    throw InputError("inverse_transform: expected " + std::to_string(model.n_components()) +
                     " latent columns, got " + std::to_string(t.cols()));
  }
  return model.recipe.invert(t * model.ptx);
}

EvidenceTensor latent_evidence(const PcovModel& model, const Matrix& t) {
  if (model.config.mode != Mode::Classification) {
    throw InputError("latent evidence requires a classification-mode model");
  }
  if (t.cols() != model.n_components()) {
    throw InputError("expected " + std::to_string(model.n_components()) +
                     " latent columns, got " + std::to_string(t.cols()));
  }
  const Matrix flat = (t * model.ptz).rowwise() + model.target_offset;
  return EvidenceTensor::from_flat(flat, model.classes_per_label);
}

LabelData predict_from_latent(const PcovModel& model, const Matrix& t) {
  return activate(latent_evidence(model, t));
}

LabelData predict(const PcovModel& model, const Matrix& x) {
  return predict_from_latent(model, transform(model, x));
}

Matrix predict_targets(const PcovModel& model, const Matrix& x) {
  if (model.config.mode != Mode::Regression) {
    throw InputError("predict_targets requires a regression-mode model");
  }
  return (transform(model, x) * model.ptz).rowwise() + model.target_offset;
}

// ---------------------------------------------------------------------------
// Kernel PCovC

KernelPcovModel fit_kpcovc(const KernelMatrix& k, const LabelData& y, const PcovConfig& config,
                           const ClassifierSpec& classifier) {
  config.validate();
  if (config.mode != Mode::Classification) {
    throw InputError("kernel PCovC requires classification mode");
  }
  const Eigen::Index n = k.values.rows();
  if (k.values.cols() != n) throw InputError("training kernel must be square");
  if (n != y.n_samples()) {
    throw InputError("kernel has " + std::to_string(n) + " rows but labels have " +
                     std::to_string(y.n_samples()));
  }
  if (config.n_components > n) {
    throw InputError("n_components exceeds the number of training samples");
  }
  if (config.route == Route::FeatureSpace) {
    throw InputError("kernel PCovC works in sample space only");
  }
  require_finite(k.values, "kernel matrix");

  KernelPcovModel model;
  model.config = config;
  model.classes_per_label = y.classes_per_label;
  if (k.is_centered) throw InputError("fit_kpcovc expects an uncentered training kernel");

  const KernelMatrix kc = center_kernel(k);
  model.centering = *kc.training_stats;
  const SymmetricEigen keig = eigh_descending(kc.values);
  const double top = std::max(keig.eigenvalues(0), 0.0);
  if (keig.eigenvalues(n - 1) < -1e-8 * top) {
    throw InputError("training kernel is not positive semidefinite (min eigenvalue " +
                     std::to_string(keig.eigenvalues(n - 1)) + ")");
  }
  const double trace = kc.values.trace();
  if (!(trace > 0.0)) throw InputError("centered training kernel is numerically zero");
  model.kernel_scale = static_cast<double>(n) / trace;
  const Matrix ks = model.kernel_scale * kc.values;

  model.classifiers = fit_classifier(ks, y, classifier);
  for (const auto& c : model.classifiers) {
    if (!c.converged) {
      model.warnings.push_back(std::string(to_string(c.family)) +
                               " classifier did not converge within its iteration budget");
    }
  }
  const Matrix raw = evidence(model.classifiers, ks).flattened();
  model.target_offset = raw.colwise().mean();
  const Matrix centered = raw.rowwise() - model.target_offset;
  const Matrix w = flat_weights(model.classifiers);
  model.target_scale = trace_normalizer(centered, n, model.warnings);
  const Matrix s = model.target_scale * centered;

  const double alpha = config.alpha;
  Matrix kt = alpha * ks;
  if (alpha < 1.0) kt += (1.0 - alpha) * multilabel_gram_contribution(split_like(s, y.classes_per_label));
  const SymmetricEigen eig = eigh_descending(kt);
  model.eigenvalues = eig.eigenvalues;
  const Eigen::Index kcomp = resolve_components(config, eig.eigenvalues, model.warnings);
  const Matrix u = eig.eigenvectors.leftCols(kcomp);
  const Vector inv_sqrt = eig.eigenvalues.head(kcomp).array().rsqrt();

  Matrix mixed = (1.0 - alpha) * (model.target_scale * w) * s.transpose();
  mixed.diagonal().array() += alpha;
  model.pkt = mixed * u * inv_sqrt.asDiagonal();

  Matrix oriented = ks * model.pkt;
  model.pkt = model.pkt * canonicalize_column_signs(oriented).asDiagonal();
  model.training_latent = ks * model.pkt;
  model.ptz = latent_fit(model.training_latent, centered);
  return model;
}

KernelPcovModel fit_kpcovc(const Matrix& x, const LabelData& y, const KernelSpec& kernel,
                           const PcovConfig& config, const ClassifierSpec& classifier) {
  config.validate();
  kernel.validate();
  ScaledData scaled = center_and_scale(x, config.standardize);
  const KernelMatrix k = compute_kernel(scaled.values, scaled.values, kernel);
  KernelPcovModel model = fit_kpcovc(k, y, config, classifier);
  model.kernel = kernel;
  if (!kernel.gamma) model.kernel.gamma = kernel.resolved_gamma(x.cols());
  model.recipe = std::move(scaled.recipe);
  model.training_features = std::move(scaled.values);
  model.training_latent = transform(model, x);

  // P_TX = Λ^{-1/2}UᵀX = Λ^{-1}TᵀX for T = UΛ^{1/2}.
  const Vector lam = model.eigenvalues.head(model.n_components());
  model.ptx = lam.cwiseInverse().asDiagonal() * model.training_latent.transpose() *
              model.training_features;
  return model;
}

Matrix transform_kernel(const KernelPcovModel& model, const KernelMatrix& cross) {
  if (cross.values.cols() != model.pkt.rows()) {
    throw InputError("cross-kernel has " + std::to_string(cross.values.cols()) +
                     " columns, model was trained on " + std::to_string(model.pkt.rows()) +
                     " samples");
  }
  const KernelMatrix centered = center_kernel(cross, model.centering);
  return model.kernel_scale * (centered.values * model.pkt);
}

Matrix transform(const KernelPcovModel& model, const Matrix& x) {
  if (model.training_features.size() == 0) {
    throw InputError("model was fitted from a precomputed kernel; use transform_kernel");
  }
  const Matrix xs = model.recipe.apply(x);
  return transform_kernel(model, compute_kernel(xs, model.training_features, model.kernel));
}

Matrix inverse_transform(const KernelPcovModel& model, const Matrix& t) {
  if (model.ptx.size() == 0) throw InputError("model has no feature-space reconstruction map");
  if (t.cols() != model.n_components()) {
    throw InputError("inverse_transform: expected " + std::to_string(model.n_components()) +
                     " latent columns, got " + std::to_string(t.cols()));
  }
  return model.recipe.invert(t * model.ptx);
}

EvidenceTensor latent_evidence(const KernelPcovModel& model, const Matrix& t) {
  if (t.cols() != model.n_components()) {
    throw InputError("expected " + std::to_string(model.n_components()) +
                     " latent columns, got " + std::to_string(t.cols()));
  }
  const Matrix flat = (t * model.ptz).rowwise() + model.target_offset;
  return EvidenceTensor::from_flat(flat, model.classes_per_label);
}

LabelData predict_from_latent(const KernelPcovModel& model, const Matrix& t) {
  return activate(latent_evidence(model, t));
}

LabelData predict(const KernelPcovModel& model, const Matrix& x) {
  return predict_from_latent(model, transform(model, x));
}

}  // namespace pcov
