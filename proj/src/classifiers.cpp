#include "pcov/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcov/error.hpp"
#include "pcov/random.hpp"

namespace pcov {

// ---------------------------------------------------------------------------
// Labels and evidence containers

LabelData LabelData::single(const std::vector<int>& labels, int n_classes) {
  IndexVector v(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) v(static_cast<Eigen::Index>(i)) = labels[i];
  return single(v, n_classes);
}

LabelData LabelData::single(const IndexVector& labels, int n_classes) {
  LabelData out;
  out.labels = labels;
  if (n_classes <= 0) n_classes = labels.size() == 0 ? 0 : labels.maxCoeff() + 1;
  out.classes_per_label = {n_classes};
  out.validate_range();
  return out;
}

LabelData LabelData::multi(const LabelMatrix& labels, std::vector<int> classes_per_label) {
  LabelData out;
  out.labels = labels;
  if (classes_per_label.empty()) {
    for (Eigen::Index l = 0; l < labels.cols(); ++l) {
      classes_per_label.push_back(labels.rows() == 0 ? 0 : labels.col(l).maxCoeff() + 1);
    }
  }
  out.classes_per_label = std::move(classes_per_label);
  out.validate_range();
  return out;
}

LabelData LabelData::rows(const std::vector<Eigen::Index>& index) const {
  LabelData out;
  out.labels.resize(static_cast<Eigen::Index>(index.size()), labels.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    out.labels.row(static_cast<Eigen::Index>(i)) = labels.row(index[i]);
  }
  out.classes_per_label = classes_per_label;
  return out;
}

void LabelData::validate_range() const {
  if (static_cast<Eigen::Index>(classes_per_label.size()) != labels.cols()) {
    throw InputError("label data: " + std::to_string(labels.cols()) + " label columns but " +
                     std::to_string(classes_per_label.size()) + " class counts");
  }
  for (Eigen::Index l = 0; l < labels.cols(); ++l) {
    const int k = classes_per_label[static_cast<std::size_t>(l)];
    for (Eigen::Index i = 0; i < labels.rows(); ++i) {
      const int v = labels(i, l);
      if (v < 0 || v >= k) {
        throw InputError("label " + std::to_string(v) + " at row " + std::to_string(i) +
                         " outside [0, " + std::to_string(k - 1) + "]");
      }
    }
  }
}

void LabelData::validate_for_training() const {
  validate_range();
  if (labels.cols() == 0) throw InputError("label data has no label columns");
  for (Eigen::Index l = 0; l < labels.cols(); ++l) {
    const int k = classes_per_label[static_cast<std::size_t>(l)];
    if (k < 2) {
      throw InputError("label column " + std::to_string(l) + " has fewer than 2 classes");
    }
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < labels.rows(); ++i) ++counts[static_cast<std::size_t>(labels(i, l))];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        throw InputError("class " + std::to_string(c) + " of label column " + std::to_string(l) +
                         " is missing from the training data");
      }
    }
  }
}

Eigen::Index EvidenceTensor::total_width() const {
  Eigen::Index w = 0;
  for (const auto& z : per_label) w += z.cols();
  return w;
}

Matrix EvidenceTensor::flattened() const {
  Matrix out(n_samples(), total_width());
  Eigen::Index offset = 0;
  for (const auto& z : per_label) {
    out.middleCols(offset, z.cols()) = z;
    offset += z.cols();
  }
  return out;
}

EvidenceTensor EvidenceTensor::from_flat(const Matrix& flat,
                                         const std::vector<int>& classes_per_label) {
  EvidenceTensor out;
  out.classes_per_label = classes_per_label;
  Eigen::Index offset = 0;
  for (int k : classes_per_label) {
    const Eigen::Index w = evidence_width(k);
    if (offset + w > flat.cols()) throw InputError("evidence width does not match class counts");
    out.per_label.push_back(flat.middleCols(offset, w));
    offset += w;
  }
  if (offset != flat.cols()) throw InputError("evidence width does not match class counts");
  return out;
}

std::string_view to_string(ClassifierFamily family) {
  switch (family) {
    case ClassifierFamily::Ridge: return "ridge";
    case ClassifierFamily::Logistic: return "logistic";
    case ClassifierFamily::LinearSvm: return "linear-svm";
    case ClassifierFamily::Perceptron: return "perceptron";
  }
  return "unknown";
}

ClassifierFamily parse_classifier_family(std::string_view name) {
  if (name == "ridge") return ClassifierFamily::Ridge;
  if (name == "logistic") return ClassifierFamily::Logistic;
  if (name == "linear-svm" || name == "svm") return ClassifierFamily::LinearSvm;
  if (name == "perceptron") return ClassifierFamily::Perceptron;
  throw InputError("unknown classifier family '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace {

void check_training_inputs(const Matrix& x, const LabelData& y, const char* who) {
  if (x.rows() != y.n_samples()) {
    throw InputError(std::string(who) + ": " + std::to_string(x.rows()) + " feature rows but " +
                     std::to_string(y.n_samples()) + " label rows");
  }
  if (x.rows() == 0) throw InputError(std::string(who) + ": no training rows");
  require_finite(x, "feature matrix");
  y.validate_for_training();
}

void require_single_label(const LabelData& y, const char* who) {
  if (y.n_labels() != 1) {
    throw InputError(std::string(who) + " expects single-label data; use fit_classifier for "
                     "multilabel problems");
  }
}

/// ±1 target columns: one column for binary (class 1 positive), one-vs-rest
/// columns otherwise.
Matrix signed_targets(const IndexVector& y, int n_classes) {
  const Eigen::Index w = evidence_width(n_classes);
  Matrix t = -Matrix::Ones(y.size(), w);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (w == 1) {
      if (y(i) == 1) t(i, 0) = 1.0;
    } else {
      t(i, y(i)) = 1.0;
    }
  }
  return t;
}

/// Shift a model fitted on centered features back to raw features.
void fold_intercept(LinearClassifierModel& model, const RowVector& feature_means) {
  model.intercept -= (feature_means * model.weights).transpose();
}

void finish(LinearClassifierModel& model, const Matrix& x) {
  if (!model.weights.allFinite() || !model.intercept.allFinite()) {
    throw Error(std::string(to_string(model.family)) + " fit produced non-finite weights");
  }
  model.training_predictions = activate_matrix(evidence_matrix(model, x));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Logistic objective over the augmented parameter block theta ((f+1) × width,
// last row = intercept) on already-centered features.
struct AugmentedLogistic {
  const Matrix& xc;
  const IndexVector& y;
  int n_classes;
  double lambda;

  Eigen::Index f() const { return xc.cols(); }
  Eigen::Index width() const { return evidence_width(n_classes); }

  Matrix scores(const Matrix& theta) const {
    return (xc * theta.topRows(f())).rowwise() + theta.row(f());
  }

  /// Probabilities per column (binary: P(class 1)).
  Matrix probabilities(const Matrix& s) const {
    Matrix p(s.rows(), s.cols());
    if (s.cols() == 1) {
      for (Eigen::Index i = 0; i < s.rows(); ++i) p(i, 0) = sigmoid(s(i, 0));
      return p;
    }
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double m = s.row(i).maxCoeff();
      p.row(i) = (s.row(i).array() - m).exp();
      p.row(i) /= p.row(i).sum();
    }
    return p;
  }

  double value(const Matrix& theta) const {
    const Matrix s = scores(theta);
    double nll = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      if (s.cols() == 1) {
        nll += log1pexp(s(i, 0)) - (y(i) == 1 ? s(i, 0) : 0.0);
      } else {
        const double m = s.row(i).maxCoeff();
        nll += m + std::log((s.row(i).array() - m).exp().sum()) - s(i, y(i));
      }
    }
    return nll / static_cast<double>(s.rows()) +
           0.5 * lambda * theta.topRows(f()).squaredNorm();
  }

  /// Residual P − Y (n × width).
  Matrix residual(const Matrix& theta) const {
    Matrix r = probabilities(scores(theta));
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      if (r.cols() == 1) {
        if (y(i) == 1) r(i, 0) -= 1.0;
      } else {
        r(i, y(i)) -= 1.0;
      }
    }
    return r;
  }

  Matrix gradient(const Matrix& theta) const {
    const Matrix r = residual(theta);
    const double n = static_cast<double>(xc.rows());
    Matrix g(f() + 1, width());
    g.topRows(f()) = xc.transpose() * r / n + lambda * theta.topRows(f());
    g.row(f()) = r.colwise().sum() / n;
    return g;
  }

  Matrix hessian(const Matrix& theta) const {
    const Eigen::Index fa = f() + 1;
    const Eigen::Index w = width();
    const double n = static_cast<double>(xc.rows());
    Matrix xa(xc.rows(), fa);
    xa.leftCols(f()) = xc;
    xa.col(f()).setOnes();
    const Matrix p = probabilities(scores(theta));

    Matrix h = Matrix::Zero(fa * w, fa * w);
    for (Eigen::Index j = 0; j < w; ++j) {
      for (Eigen::Index k = j; k < w; ++k) {
        Vector weight(xc.rows());
        if (w == 1) {
          weight = p.col(0).array() * (1.0 - p.col(0).array());
        } else {
          weight = p.col(j).array() * ((j == k ? 1.0 : 0.0) - p.col(k).array());
        }
        Matrix block = xa.transpose() * weight.asDiagonal() * xa / n;
        h.block(j * fa, k * fa, fa, fa) = block;
        if (k != j) h.block(k * fa, j * fa, fa, fa) = block.transpose();
      }
      for (Eigen::Index a = 0; a < f(); ++a) h(j * fa + a, j * fa + a) += lambda;
    }
    return h;
  }

  /// The softmax parameterization is invariant to adding a common vector to
  /// every class column; the regularized optimum has zero row sums.
  void center_classes(Matrix& theta) const {
    if (theta.cols() > 1) theta.colwise() -= theta.rowwise().mean();
  }
};

Matrix flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

// Gradient of the raw (uncentered) parameterization from the centered one.
double raw_gradient_inf_norm(const Matrix& g, const RowVector& means) {
  const Eigen::Index f = g.rows() - 1;
  const Matrix gw = g.topRows(f) - means.transpose() * g.row(f);
  return std::max(gw.cwiseAbs().maxCoeff(), g.row(f).cwiseAbs().maxCoeff());
}

// Newton iterations with Armijo backtracking; the Hessian is stabilized by a
// tiny diagonal shift for the unregularized intercept directions.
template <class Problem>
bool newton_minimize(const Problem& problem, Matrix& theta, const RowVector& means, double tol,
                     int max_iter, int& iterations) {
  const Eigen::Index rows = theta.rows();
  const Eigen::Index cols = theta.cols();
  double value = problem.value(theta);
  for (iterations = 0; iterations < max_iter; ++iterations) {
    const Matrix g = problem.gradient(theta);
    const double gnorm = std::max(g.cwiseAbs().maxCoeff(), raw_gradient_inf_norm(g, means));
    if (gnorm < tol) return true;

    Matrix h = problem.hessian(theta);
    const double shift = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    h.diagonal().array() += shift;
    const Vector step = -h.ldlt().solve(flatten(g));
    if (!step.allFinite()) return false;

    const double slope = flatten(g).col(0).dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Matrix candidate = theta + t * unflatten(step, rows, cols);
      problem.center_classes(candidate);
      const double cv = problem.value(candidate);
      if (cv <= value + 1e-4 * t * std::min(slope, 0.0) || (cv <= value && ls > 40)) {
        theta = std::move(candidate);
        value = cv;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No descent possible at double precision; accept if gradient is tiny.
      return gnorm < 1e3 * tol;
    }
  }
  const Matrix g = problem.gradient(theta);
  return std::max(g.cwiseAbs().maxCoeff(), raw_gradient_inf_norm(g, means)) < tol;
}

// L-BFGS for problems too large for a dense Hessian.
template <class Problem>
bool lbfgs_minimize(const Problem& problem, Matrix& theta, const RowVector& means, double tol,
                    int max_iter, int& iterations) {
  const Eigen::Index rows = theta.rows();
  const Eigen::Index cols = theta.cols();
  constexpr int kMemory = 10;
  std::vector<Vector> s_hist, y_hist;
  Vector x = flatten(theta);
  double value = problem.value(theta);
  Vector g = flatten(problem.gradient(theta));
  for (iterations = 0; iterations < max_iter * 20; ++iterations) {
    const Matrix gm = unflatten(g, rows, cols);
    if (std::max(g.cwiseAbs().maxCoeff(), raw_gradient_inf_norm(gm, means)) < tol) {
      theta = unflatten(x, rows, cols);
      return true;
    }
    Vector q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      const double rho = 1.0 / y_hist[static_cast<std::size_t>(i)].dot(s_hist[static_cast<std::size_t>(i)]);
      alpha[static_cast<std::size_t>(i)] = rho * s_hist[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
      const double beta = rho * y_hist[i].dot(q);
      q += s_hist[i] * (alpha[i] - beta);
    }
    Vector dir = -q;
    double slope = g.dot(dir);
    if (slope >= 0) {
      dir = -g;
      slope = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
    }
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Matrix candidate = unflatten(x + t * dir, rows, cols);
      problem.center_classes(candidate);
      const double cv = problem.value(candidate);
      if (cv <= value + 1e-4 * t * slope) {
        const Vector xn = flatten(candidate);
        const Vector gn = flatten(problem.gradient(candidate));
        const Vector s = xn - x;
        const Vector yv = gn - g;
        if (s.dot(yv) > 1e-16) {
          s_hist.push_back(s);
          y_hist.push_back(yv);
          if (s_hist.size() > kMemory) {
            s_hist.erase(s_hist.begin());
            y_hist.erase(y_hist.begin());
          }
        }
        x = xn;
        g = gn;
        value = cv;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  theta = unflatten(x, rows, cols);
  const Matrix gm = unflatten(g, rows, cols);
  return std::max(g.cwiseAbs().maxCoeff(), raw_gradient_inf_norm(gm, means)) < tol;
}

constexpr Eigen::Index kDenseNewtonLimit = 1500;

}  // namespace

// ---------------------------------------------------------------------------
// Families

LinearClassifierModel fit_ridge_classifier(const Matrix& x, const LabelData& y, double lambda) {
  check_training_inputs(x, y, "fit_ridge_classifier");
  require_single_label(y, "fit_ridge_classifier");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InputError("ridge lambda must be a finite nonnegative number");
  }

  LinearClassifierModel model;
  model.family = ClassifierFamily::Ridge;
  model.n_classes = y.classes_per_label[0];
  model.regularization = lambda;

  const RowVector means = x.colwise().mean();
  const Matrix xc = x.rowwise() - means;
  const Matrix targets = signed_targets(y.column(0), model.n_classes);
  const RowVector target_means = targets.colwise().mean();

  Matrix gram = xc.transpose() * xc;
  const Matrix rhs = xc.transpose() * (targets.rowwise() - target_means);
  if (lambda > 0.0) {
    gram.diagonal().array() += lambda;
    model.weights = gram.ldlt().solve(rhs);
  } else {
    const SymmetricEigen eig = eigh_descending(gram);
    if (numerical_rank(eig.eigenvalues) == gram.rows()) {
      model.weights = gram.ldlt().solve(rhs);
    } else {
      model.weights = psd_power(gram, -1.0) * rhs;
      model.used_pseudoinverse = true;
    }
  }
  model.intercept = target_means.transpose();
  fold_intercept(model, means);
  finish(model, x);
  return model;
}

LinearClassifierModel fit_logistic(const Matrix& x, const LabelData& y, double lambda, double tol,
                                   int max_iter) {
  check_training_inputs(x, y, "fit_logistic");
  require_single_label(y, "fit_logistic");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InputError("logistic lambda must be a finite nonnegative number");
  }
  if (!(tol > 0.0) || max_iter < 1) throw InputError("logistic tol and max_iter must be positive");

  LinearClassifierModel model;
  model.family = ClassifierFamily::Logistic;
  model.n_classes = y.classes_per_label[0];
  model.regularization = lambda;

  const RowVector means = x.colwise().mean();
  const Matrix xc = x.rowwise() - means;
  const IndexVector labels = y.column(0);
  const AugmentedLogistic problem{xc, labels, model.n_classes, lambda};

  Matrix theta = Matrix::Zero(xc.cols() + 1, problem.width());
  const Eigen::Index dim = theta.size();
  model.converged = dim <= kDenseNewtonLimit
                        ? newton_minimize(problem, theta, means, tol, max_iter, model.iterations)
                        : lbfgs_minimize(problem, theta, means, tol, max_iter, model.iterations);

  model.weights = theta.topRows(xc.cols());
  model.intercept = theta.row(xc.cols()).transpose();
  fold_intercept(model, means);
  finish(model, x);
  return model;
}

LogisticObjective logistic_objective(const Matrix& x, const IndexVector& y, int n_classes,
                                     const Matrix& weights, const Vector& intercept,
                                     double lambda) {
  const Eigen::Index f = x.cols();
  Matrix theta(f + 1, weights.cols());
  theta.topRows(f) = weights;
  theta.row(f) = intercept.transpose();
  const AugmentedLogistic problem{x, y, n_classes, lambda};
  const Matrix g = problem.gradient(theta);
  LogisticObjective out;
  out.value = problem.value(theta);
  out.gradient.resize(g.size());
  out.gradient.head(f * g.cols()) = flatten(g.topRows(f));
  out.gradient.tail(g.cols()) = g.row(f).transpose();
  return out;
}

double squared_hinge_objective(const Matrix& x, const Vector& signed_targets, const Vector& w,
                               double b, double c) {
  const Vector margins = (x * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double slack = 1.0 - signed_targets(i) * margins(i);
    if (slack > 0) loss += slack * slack;
  }
  return 0.5 * w.squaredNorm() + c * loss / static_cast<double>(x.rows());
}

namespace {

struct SquaredHingeColumn {
  const Matrix& xc;
  Vector targets;
  double c;

  Eigen::Index f() const { return xc.cols(); }

  double value(const Matrix& theta) const {
    return squared_hinge_objective(xc, targets, theta.col(0).head(f()), theta(f(), 0), c);
  }

  Vector slack(const Matrix& theta) const {
    const Vector m = (xc * theta.col(0).head(f())).array() + theta(f(), 0);
    return (1.0 - targets.array() * m.array()).max(0.0);
  }

  Matrix gradient(const Matrix& theta) const {
    const Vector s = slack(theta);
    const double n = static_cast<double>(xc.rows());
    const Vector coef = -(2.0 * c / n) * (targets.array() * s.array()).matrix();
    Matrix g(f() + 1, 1);
    g.col(0).head(f()) = theta.col(0).head(f()) + xc.transpose() * coef;
    g(f(), 0) = coef.sum();
    return g;
  }

  // Generalized Hessian: identity on w plus the active-set Gram matrix.
  Matrix hessian(const Matrix& theta) const {
    const Vector s = slack(theta);
    const double n = static_cast<double>(xc.rows());
    Matrix h = Matrix::Zero(f() + 1, f() + 1);
    for (Eigen::Index i = 0; i < xc.rows(); ++i) {
      if (s(i) <= 0.0) continue;
      Vector xa(f() + 1);
      xa.head(f()) = xc.row(i).transpose();
      xa(f()) = 1.0;
      h.noalias() += xa * xa.transpose();
    }
    h *= 2.0 * c / n;
    h.topLeftCorner(f(), f()).diagonal().array() += 1.0;
    return h;
  }

  void center_classes(Matrix&) const {}
};

}  // namespace

LinearClassifierModel fit_linear_svm(const Matrix& x, const LabelData& y, double c, double tol,
                                     int max_iter) {
  check_training_inputs(x, y, "fit_linear_svm");
  require_single_label(y, "fit_linear_svm");
  if (!(c > 0.0) || !std::isfinite(c)) throw InputError("SVM C must be a finite positive number");
  if (!(tol > 0.0) || max_iter < 1) throw InputError("SVM tol and max_iter must be positive");

  LinearClassifierModel model;
  model.family = ClassifierFamily::LinearSvm;
  model.n_classes = y.classes_per_label[0];
  model.regularization = c;

  const RowVector means = x.colwise().mean();
  const Matrix xc = x.rowwise() - means;
  const Matrix targets = signed_targets(y.column(0), model.n_classes);
  const Eigen::Index f = x.cols();

  model.weights.resize(f, targets.cols());
  model.intercept.resize(targets.cols());
  for (Eigen::Index j = 0; j < targets.cols(); ++j) {
    const SquaredHingeColumn problem{xc, targets.col(j), c};
    Matrix theta = Matrix::Zero(f + 1, 1);
    int iterations = 0;
    const bool ok = f + 1 <= kDenseNewtonLimit
                        ? newton_minimize(problem, theta, means, tol, max_iter, iterations)
                        : lbfgs_minimize(problem, theta, means, tol, max_iter, iterations);
    model.converged = model.converged && ok;
    model.iterations = std::max(model.iterations, iterations);
    model.weights.col(j) = theta.col(0).head(f);
    model.intercept(j) = theta(f, 0);
  }
  fold_intercept(model, means);
  finish(model, x);
  return model;
}

LinearClassifierModel fit_perceptron(const Matrix& x, const LabelData& y, int epochs,
                                     std::uint64_t seed) {
  check_training_inputs(x, y, "fit_perceptron");
  require_single_label(y, "fit_perceptron");
  if (epochs < 1) throw InputError("perceptron epochs must be positive");

  LinearClassifierModel model;
  model.family = ClassifierFamily::Perceptron;
  model.n_classes = y.classes_per_label[0];
  model.converged = false;

  const RowVector means = x.colwise().mean();
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  Matrix xa(n, f + 1);
  xa.leftCols(f) = x.rowwise() - means;
  xa.col(f).setOnes();

  const IndexVector labels = y.column(0);
  const Eigen::Index w = evidence_width(model.n_classes);
  Matrix theta = Matrix::Zero(f + 1, w);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    int mistakes = 0;
    for (Eigen::Index i : order) {
      const auto row = xa.row(i);
      if (w == 1) {
        const double target = labels(i) == 1 ? 1.0 : -1.0;
        if (target * row.dot(theta.col(0).transpose()) <= 0.0) {
          theta.col(0) += target * row.transpose();
          ++mistakes;
        }
      } else {
        const RowVector scores = row * theta;
        Eigen::Index predicted = 0;
        for (Eigen::Index k = 1; k < w; ++k) {
          if (scores(k) > scores(predicted)) predicted = k;
        }
        if (predicted != labels(i)) {
          theta.col(labels(i)) += row.transpose();
          theta.col(predicted) -= row.transpose();
          ++mistakes;
        }
      }
    }
    model.iterations = epoch + 1;
    if (mistakes == 0) {
      model.converged = true;
      break;
    }
  }

  model.weights = theta.topRows(f);
  model.intercept = theta.row(f).transpose();
  fold_intercept(model, means);
  finish(model, x);
  return model;
}

std::vector<LinearClassifierModel> fit_classifier(const Matrix& x, const LabelData& y,
                                                  const ClassifierSpec& spec) {
  check_training_inputs(x, y, "fit_classifier");
  std::vector<LinearClassifierModel> models;
  for (int l = 0; l < y.n_labels(); ++l) {
    const LabelData column = LabelData::single(y.column(l), y.classes_per_label[static_cast<std::size_t>(l)]);
    switch (spec.family) {
      case ClassifierFamily::Ridge:
        models.push_back(fit_ridge_classifier(x, column, spec.ridge_lambda));
        break;
      case ClassifierFamily::Logistic:
        models.push_back(fit_logistic(x, column, spec.logistic_lambda, spec.tol, spec.max_iter));
        break;
      case ClassifierFamily::LinearSvm:
        models.push_back(fit_linear_svm(x, column, spec.svm_c, spec.tol, spec.max_iter));
        break;
      case ClassifierFamily::Perceptron:
        models.push_back(fit_perceptron(x, column, spec.perceptron_epochs, spec.seed));
        break;
    }
  }
  return models;
}

// ---------------------------------------------------------------------------
// Evidence and activation

Matrix evidence_matrix(const LinearClassifierModel& model, const Matrix& x) {
  if (x.cols() != model.n_features()) {
    throw InputError("classifier expects " + std::to_string(model.n_features()) +
                     " features, got " + std::to_string(x.cols()));
  }
  return (x * model.weights).rowwise() + model.intercept.transpose();
}

EvidenceTensor evidence(const LinearClassifierModel& model, const Matrix& x) {
  return evidence(std::vector<LinearClassifierModel>{model}, x);
}

EvidenceTensor evidence(const std::vector<LinearClassifierModel>& models, const Matrix& x) {
  EvidenceTensor out;
  for (const auto& m : models) {
    out.per_label.push_back(evidence_matrix(m, x));
    out.classes_per_label.push_back(m.n_classes);
  }
  return out;
}

IndexVector activate_matrix(const Matrix& scores) {
  IndexVector out(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (scores.cols() == 1) {
      out(i) = scores(i, 0) > 0.0 ? 1 : 0;
      continue;
    }
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) > scores(i, best)) best = k;
    }
    out(i) = static_cast<int>(best);
  }
  return out;
}

LabelData activate(const EvidenceTensor& z) {
  LabelData out;
  out.labels.resize(z.n_samples(), z.n_labels());
  for (int l = 0; l < z.n_labels(); ++l) {
    const auto& slice = z.per_label[static_cast<std::size_t>(l)];
    const int k = z.classes_per_label[static_cast<std::size_t>(l)];
    if (slice.cols() != evidence_width(k)) {
      throw InputError("evidence slice width " + std::to_string(slice.cols()) +
                       " does not match " + std::to_string(k) + " classes");
    }
    out.labels.col(l) = activate_matrix(slice);
  }
  out.classes_per_label = z.classes_per_label;
  return out;
}

double accuracy(const IndexVector& truth, const IndexVector& predicted) {
  if (truth.size() != predicted.size()) throw InputError("accuracy: length mismatch");
  if (truth.size() == 0) return 0.0;
  return static_cast<double>((truth.array() == predicted.array()).count()) /
         static_cast<double>(truth.size());
}

double accuracy(const LabelData& truth, const LabelData& predicted) {
  if (truth.labels.rows() != predicted.labels.rows() ||
      truth.labels.cols() != predicted.labels.cols()) {
    throw InputError("accuracy: label shape mismatch");
  }
  if (truth.n_samples() == 0) return 0.0;
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < truth.n_samples(); ++i) {
    if ((truth.labels.row(i).array() == predicted.labels.row(i).array()).all()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.n_samples());
}

}  // namespace pcov
