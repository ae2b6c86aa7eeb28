#include "cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcov/analysis.hpp"
#include "pcov/baselines.hpp"
#include "pcov/dataset.hpp"
#include "pcov/error.hpp"
#include "pcov/pcov.hpp"
#include "pcov/plot.hpp"
#include "pcov/serialize.hpp"

namespace pcov::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Configuration files: TOML through CLI11, or a JSON object whose nested
// objects name subcommands.

class TomlOrJsonConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
      json doc;
      try {
        doc = json::parse(text);
      } catch (const json::exception& e) {
        throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
      }
      std::vector<CLI::ConfigItem> items;
      flatten(doc, {}, items);
      return items;
    }
    std::istringstream toml(text);
    return CLI::ConfigTOML::from_config(toml);
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        flatten(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

// ---------------------------------------------------------------------------
// Options

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool quiet = false;
};

/// Where the data comes from and how it is split.
struct DatasetManifest {
  std::string source;  ///< CSV path or "builtin:iris"
  std::vector<std::string> feature_columns;
  std::vector<std::string> label_columns;
  double test_fraction = 0.2;
  std::optional<std::uint64_t> split_seed;
  std::string test_indices_file;
  std::string scaling = "center";  ///< center | standardize
};

struct DataOptions {
  std::string manifest;
  std::string data;
  bool iris = false;
  std::vector<std::string> labels;
  std::vector<std::string> features;
  std::optional<double> test_fraction;
  std::optional<std::uint64_t> split_seed;
  std::string test_indices;
  std::optional<std::string> scaling;
};

struct ModelOptions {
  double alpha = 0.5;
  int components = 2;
  std::string mode = "classification";
  std::string route = "auto";
  std::string classifier = "logistic";
  double logistic_lambda = 1e-4;
  double ridge_lambda = 1.0;
  double svm_c = 1.0;
  double tol = 1e-8;
  int max_iter = 500;
  int epochs = 100;
  double regression_lambda = 0.0;
  std::string kernel;
  std::optional<double> gamma;
  int degree = 3;
  double coef0 = 1.0;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--manifest", d.manifest, "Dataset manifest (JSON)");
  cmd->add_option("--data", d.data, "CSV file with a header row");
  cmd->add_flag("--iris", d.iris, "Use the bundled iris data");
  cmd->add_option("--label", d.labels, "Label (or target) column; repeat for multilabel")
      ->delimiter(',');
  cmd->add_option("--features", d.features, "Feature columns (default: all non-label columns)")
      ->delimiter(',');
  cmd->add_option("--test-fraction", d.test_fraction, "Held-out fraction");
  cmd->add_option("--split-seed", d.split_seed, "Seed for the train/test split (default: --seed)");
  cmd->add_option("--test-indices", d.test_indices, "CSV whose first column lists test rows");
  cmd->add_option("--scaling", d.scaling, "center or standardize")
      ->check(CLI::IsMember({"center", "standardize"}));
}

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--alpha", m.alpha, "Mixing parameter in [0, 1]");
  cmd->add_option("--components,-k", m.components, "Latent dimensions");
  cmd->add_option("--mode", m.mode, "classification or regression")
      ->check(CLI::IsMember({"classification", "regression"}));
  cmd->add_option("--route", m.route, "auto, sample-space or feature-space");
  cmd->add_option("--classifier", m.classifier, "logistic, ridge, linear-svm or perceptron");
  cmd->add_option("--logistic-lambda", m.logistic_lambda, "Logistic L2 strength");
  cmd->add_option("--ridge-lambda", m.ridge_lambda, "Ridge classifier strength");
  cmd->add_option("--svm-c", m.svm_c, "Squared-hinge SVM cost");
  cmd->add_option("--tol", m.tol, "Solver gradient tolerance");
  cmd->add_option("--max-iter", m.max_iter, "Solver iteration cap");
  cmd->add_option("--epochs", m.epochs, "Perceptron epochs");
  cmd->add_option("--regression-lambda", m.regression_lambda, "Ridge strength for regression mode");
  cmd->add_option("--kernel", m.kernel, "linear, rbf or poly (enables the kernel model)");
  cmd->add_option("--gamma", m.gamma, "Kernel gamma (default 1/n_features)");
  cmd->add_option("--degree", m.degree, "Polynomial degree");
  cmd->add_option("--coef0", m.coef0, "Polynomial offset");
}

DatasetManifest resolve_manifest(const DataOptions& d) {
  DatasetManifest m;
  if (!d.manifest.empty()) {
    std::ifstream in(d.manifest);
    if (!in) throw InputError("cannot open manifest '" + d.manifest + "'");
    json j;
    try {
      j = json::parse(in);
      m.source = j.at("source").get<std::string>();
      if (m.source.rfind("builtin:", 0) != 0 && fs::path(m.source).is_relative()) {
        m.source = (fs::path(d.manifest).parent_path() / m.source).string();
      }
      m.feature_columns = j.value("features", std::vector<std::string>{});
      m.label_columns = j.value("labels", std::vector<std::string>{});
      if (j.contains("split")) {
        const json& s = j.at("split");
        m.test_fraction = s.value("test_fraction", m.test_fraction);
        if (s.contains("seed")) m.split_seed = s.at("seed").get<std::uint64_t>();
        if (s.contains("test_indices_file")) {
          m.test_indices_file = s.at("test_indices_file").get<std::string>();
          if (fs::path(m.test_indices_file).is_relative()) {
            m.test_indices_file = (fs::path(d.manifest).parent_path() / m.test_indices_file).string();
          }
        }
      }
      m.scaling = j.value("scaling", m.scaling);
    } catch (const json::exception& e) {
      throw InputError("manifest '" + d.manifest + "': " + e.what());
    }
  }
  if (d.iris) m.source = "builtin:iris";
  if (!d.data.empty()) m.source = d.data;
  if (!d.labels.empty()) m.label_columns = d.labels;
  if (!d.features.empty()) m.feature_columns = d.features;
  if (d.test_fraction) m.test_fraction = *d.test_fraction;
  if (d.split_seed) m.split_seed = d.split_seed;
  if (!d.test_indices.empty()) m.test_indices_file = d.test_indices;
  if (d.scaling) m.scaling = *d.scaling;

  if (m.source.empty()) throw InputError("no dataset given (use --data, --iris or --manifest)");
  if (m.label_columns.empty()) {
    m.label_columns = {m.source == "builtin:iris" ? "species" : "label"};
  }
  if (m.scaling != "center" && m.scaling != "standardize") {
    throw InputError("scaling must be 'center' or 'standardize'");
  }
  return m;
}

Table load_table(const std::string& source) {
  if (source == "builtin:iris") return iris_table();
  if (source.rfind("builtin:", 0) == 0) throw InputError("unknown builtin dataset '" + source + "'");
  return read_csv(source);
}

struct LoadedData {
  DatasetManifest manifest;
  Dataset dataset;
  Matrix targets;  ///< raw label columns (regression targets)
  Split split;
};

LoadedData load_data(const DataOptions& opts, std::uint64_t seed, bool classification) {
  LoadedData out;
  out.manifest = resolve_manifest(opts);
  const Table table = load_table(out.manifest.source);
  const auto& m = out.manifest;
  if (classification) {
    out.dataset = dataset_from_table(table, m.label_columns, m.feature_columns);
  } else {
    Table relabeled = table;
    out.targets.resize(table.values.rows(), static_cast<Eigen::Index>(m.label_columns.size()));
    for (std::size_t l = 0; l < m.label_columns.size(); ++l) {
      out.targets.col(static_cast<Eigen::Index>(l)) = table.values.col(table.column_index(m.label_columns[l]));
    }
    // Feature selection only; targets are real-valued.
    std::vector<std::string> features = m.feature_columns;
    if (features.empty()) {
      for (const auto& c : table.columns) {
        if (std::find(m.label_columns.begin(), m.label_columns.end(), c) == m.label_columns.end()) {
          features.push_back(c);
        }
      }
    }
    out.dataset.feature_names = features;
    out.dataset.label_names = m.label_columns;
    out.dataset.features.resize(table.values.rows(), static_cast<Eigen::Index>(features.size()));
    for (std::size_t j = 0; j < features.size(); ++j) {
      for (const auto& l : m.label_columns) {
        if (l == features[j]) throw InputError("column '" + l + "' is listed as both feature and target");
      }
      out.dataset.features.col(static_cast<Eigen::Index>(j)) = table.values.col(table.column_index(features[j]));
    }
  }
  const Eigen::Index n = out.dataset.features.rows();
  if (!m.test_indices_file.empty()) {
    const Table idx = read_csv(m.test_indices_file);
    std::vector<Eigen::Index> test;
    for (Eigen::Index i = 0; i < idx.values.rows(); ++i) {
      const double v = idx.values(i, 0);
      if (v != std::floor(v)) throw InputError("test index file holds a non-integer row index");
      test.push_back(static_cast<Eigen::Index>(v));
    }
    out.split = explicit_split(n, test);
  } else {
    const std::uint64_t s = m.split_seed.value_or(seed);
    out.split = classification ? stratified_split(out.dataset.labels, m.test_fraction, s)
                               : random_split(n, m.test_fraction, s);
  }
  return out;
}

PcovConfig make_config(const ModelOptions& o, const DatasetManifest& m) {
  PcovConfig c;
  c.alpha = o.alpha;
  c.n_components = o.components;
  c.route = parse_route(o.route);
  c.mode = parse_mode(o.mode);
  c.standardize = m.scaling == "standardize";
  c.regression_lambda = o.regression_lambda;
  c.validate();
  return c;
}

ClassifierSpec make_classifier(const ModelOptions& o, std::uint64_t seed) {
  ClassifierSpec s;
  s.family = parse_classifier_family(o.classifier);
  s.logistic_lambda = o.logistic_lambda;
  s.ridge_lambda = o.ridge_lambda;
  s.svm_c = o.svm_c;
  s.tol = o.tol;
  s.max_iter = o.max_iter;
  s.perceptron_epochs = o.epochs;
  s.seed = seed;
  if (!(s.tol > 0.0) || s.max_iter < 1 || s.perceptron_epochs < 1) {
    throw InputError("solver tolerance, iteration cap and epochs must be positive");
  }
  if (!(s.logistic_lambda >= 0.0) || !(s.ridge_lambda >= 0.0) || !(s.svm_c > 0.0)) {
    throw InputError("regularization strengths must be nonnegative and svm C positive");
  }
  return s;
}

std::optional<KernelSpec> make_kernel(const ModelOptions& o) {
  if (o.kernel.empty()) {
    if (o.gamma) throw InputError("--gamma requires --kernel");
    return std::nullopt;
  }
  KernelSpec k;
  k.family = parse_kernel_family(o.kernel);
  k.gamma = o.gamma;
  k.degree = o.degree;
  k.coef0 = o.coef0;
  k.validate();
  return k;
}

// ---------------------------------------------------------------------------
// Output helpers

fs::path out_path(const GlobalOptions& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Shortest round-trip text, for progress messages.
std::string short_num(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::vector<std::string> latent_names(Eigen::Index k) {
  std::vector<std::string> names;
  for (Eigen::Index j = 1; j <= k; ++j) names.push_back("t" + std::to_string(j));
  return names;
}

/// id, split (0 train, 1 test), label columns, t1..tk.
Table embedding_table(const Matrix& t, const Split& split, const std::vector<std::string>& label_names,
                      const Matrix& label_values, const std::vector<std::string>& comments) {
  Table table;
  table.comments = comments;
  table.comments.push_back("split: 0=train 1=test; id is the source row index");
  table.columns = {"id", "split"};
  table.columns.insert(table.columns.end(), label_names.begin(), label_names.end());
  for (const auto& c : latent_names(t.cols())) table.columns.push_back(c);
  const Eigen::Index n = t.rows();
  const auto n_labels = static_cast<Eigen::Index>(label_names.size());
  table.values.resize(n, 2 + n_labels + t.cols());
  std::vector<bool> is_test(static_cast<std::size_t>(n), false);
  for (Eigen::Index i : split.test) is_test[static_cast<std::size_t>(i)] = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    table.values(i, 0) = static_cast<double>(i);
    table.values(i, 1) = is_test[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    table.values.block(i, 2, 1, n_labels) = label_values.row(i);
    table.values.block(i, 2 + n_labels, 1, t.cols()) = t.row(i);
  }
  return table;
}

Matrix label_matrix(const LabelData& y) { return y.labels.cast<double>(); }

json confusion_json(const ConfusionMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.counts.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.counts.cols(); ++j) row.push_back(m.counts(i, j));
    rows.push_back(row);
  }
  json out = {{"counts", rows}, {"total", m.total()}, {"accuracy", m.accuracy()}};
  if (m.counts.rows() == 2) {
    out["tp"] = m.true_positives();
    out["tn"] = m.true_negatives();
    out["fp"] = m.false_positives();
    out["fn"] = m.false_negatives();
  }
  return out;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

/// Model document plus the dataset column names the CLI needs to reapply it.
json model_document(const AnyModel& model, const Dataset& ds) {
  json doc = model_to_json(model);
  doc["dataset"] = {{"feature_names", ds.feature_names}, {"label_names", ds.label_names}};
  return doc;
}

struct LoadedModel {
  AnyModel model;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;
};

LoadedModel read_model(const std::string& path) {
  if (path.empty()) throw InputError("--model is required");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  LoadedModel out{model_from_json(doc), {}, {}};
  if (doc.contains("dataset")) {
    out.feature_names = doc["dataset"].value("feature_names", std::vector<std::string>{});
    out.label_names = doc["dataset"].value("label_names", std::vector<std::string>{});
  }
  return out;
}

Eigen::Index model_features(const AnyModel& m) {
  if (const auto* lin = std::get_if<PcovModel>(&m)) return lin->n_features();
  return std::get<KernelPcovModel>(m).recipe.n_features();
}

Matrix model_transform(const AnyModel& m, const Matrix& x) {
  return std::visit([&](const auto& model) { return transform(model, x); }, m);
}

/// Feature columns of a CSV in the order the model was fitted with.
Matrix model_inputs(const LoadedModel& lm, const Table& table) {
  const Eigen::Index f = model_features(lm.model);
  Matrix x(table.values.rows(), f);
  if (!lm.feature_names.empty()) {
    for (Eigen::Index j = 0; j < f; ++j) {
      x.col(j) = table.values.col(table.column_index(lm.feature_names[static_cast<std::size_t>(j)]));
    }
    return x;
  }
  if (table.values.cols() != f) {
    throw InputError("data has " + std::to_string(table.values.cols()) + " columns, model expects " +
                     std::to_string(f) + " features");
  }
  return table.values;
}

/// Embedding CSV split into its parts.
struct EmbeddingFile {
  Table table;
  Matrix latent;
  std::vector<bool> is_test;
  std::vector<std::string> label_columns;
};

EmbeddingFile read_embedding(const std::string& path) {
  if (path.empty()) throw InputError("--embedding is required");
  EmbeddingFile e;
  e.table = read_csv(path);
  static const std::regex latent_re("t[0-9]+");
  std::vector<Eigen::Index> latent_cols;
  for (std::size_t j = 0; j < e.table.columns.size(); ++j) {
    const auto& c = e.table.columns[j];
    if (std::regex_match(c, latent_re)) {
      latent_cols.push_back(static_cast<Eigen::Index>(j));
    } else if (c != "id" && c != "split") {
      e.label_columns.push_back(c);
    }
  }
  if (latent_cols.empty()) throw InputError("'" + path + "' has no latent columns t1..tk");
  e.latent.resize(e.table.values.rows(), static_cast<Eigen::Index>(latent_cols.size()));
  for (std::size_t j = 0; j < latent_cols.size(); ++j) {
    e.latent.col(static_cast<Eigen::Index>(j)) = e.table.values.col(latent_cols[j]);
  }
  const auto split_it = std::find(e.table.columns.begin(), e.table.columns.end(), "split");
  e.is_test.assign(static_cast<std::size_t>(e.table.values.rows()), false);
  if (split_it != e.table.columns.end()) {
    const auto sc = static_cast<Eigen::Index>(split_it - e.table.columns.begin());
    for (Eigen::Index i = 0; i < e.table.values.rows(); ++i) {
      e.is_test[static_cast<std::size_t>(i)] = e.table.values(i, sc) == 1.0;
    }
  }
  return e;
}

IndexVector embedding_labels(const EmbeddingFile& e, std::string column) {
  if (column.empty()) {
    if (e.label_columns.empty()) throw InputError("embedding has no label column");
    column = e.label_columns.front();
  }
  return labels_from_table(e.table, {column}).column(0);
}

std::vector<double> ids_of(const Table& table) {
  std::vector<double> ids;
  const auto it = std::find(table.columns.begin(), table.columns.end(), "id");
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    ids.push_back(it == table.columns.end()
                      ? static_cast<double>(i)
                      : table.values(i, static_cast<Eigen::Index>(it - table.columns.begin())));
  }
  return ids;
}

// ---------------------------------------------------------------------------
// Commands

struct FitArgs {
  DataOptions data;
  ModelOptions model;
};

void cmd_fit(const GlobalOptions& g, const FitArgs& a, std::ostream& out) {
  const bool classification = parse_mode(a.model.mode) == Mode::Classification;
  const LoadedData d = load_data(a.data, g.seed, classification);
  const PcovConfig config = make_config(a.model, d.manifest);
  const ClassifierSpec clf = make_classifier(a.model, g.seed);
  const auto kernel = make_kernel(a.model);
  const Matrix x_train = select_rows(d.dataset.features, d.split.train);
  const Matrix x_test = select_rows(d.dataset.features, d.split.test);

  json metrics = {{"mode", std::string(to_string(config.mode))},
                  {"alpha", config.alpha},
                  {"n_train", d.split.train.size()},
                  {"n_test", d.split.test.size()},
                  {"features", d.dataset.feature_names},
                  {"labels", d.dataset.label_names}};
  AnyModel model;
  Matrix t_all;
  Matrix label_values;
  std::vector<std::string> warnings;

  if (!classification) {
    if (kernel) throw InputError("the kernel model supports classification mode only");
    const Matrix y_train = select_rows(d.targets, d.split.train);
    const Matrix y_test = select_rows(d.targets, d.split.test);
    PcovModel m = fit_pcovr(x_train, y_train, config);
    const auto r2 = [](const Matrix& y, const Matrix& p) {
      const double ss_res = (y - p).squaredNorm();
      const double ss_tot = (y.rowwise() - y.colwise().mean()).squaredNorm();
      return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    };
    const Matrix p_train = predict_targets(m, x_train);
    const Matrix p_test = predict_targets(m, x_test);
    metrics["train_mse"] = (y_train - p_train).squaredNorm() / static_cast<double>(y_train.size());
    metrics["test_mse"] = (y_test - p_test).squaredNorm() / static_cast<double>(y_test.size());
    metrics["train_r2"] = r2(y_train, p_train);
    metrics["test_r2"] = r2(y_test, p_test);
    metrics["route_used"] = std::string(to_string(m.route_used));
    metrics["eigenvalues"] = vector_json(m.retained_eigenvalues());
    metrics["spectrum"] = vector_json(m.eigenvalues);
    warnings = m.warnings;
    t_all = transform(m, d.dataset.features);
    label_values = d.targets;
    model = std::move(m);
  } else {
    const LabelData y_train = d.dataset.labels.rows(d.split.train);
    const LabelData y_test = d.dataset.labels.rows(d.split.test);
    Matrix t_train;
    Matrix t_test;
    LabelData p_train;
    LabelData p_test;
    if (kernel) {
      KernelPcovModel m = fit_kpcovc(x_train, y_train, *kernel, config, clf);
      t_train = m.training_latent;
      t_test = transform(m, x_test);
      p_train = predict_from_latent(m, t_train);
      p_test = predict_from_latent(m, t_test);
      metrics["kernel"] = std::string(to_string(m.kernel.family));
      metrics["gamma"] = *m.kernel.gamma;
      metrics["route_used"] = "sample-space";
      metrics["eigenvalues"] = vector_json(m.eigenvalues.head(m.n_components()));
      metrics["spectrum"] = vector_json(m.eigenvalues);
      warnings = m.warnings;
      t_all = transform(m, d.dataset.features);
      model = std::move(m);
    } else {
      PcovModel m = fit_pcovc(x_train, y_train, config, clf);
      t_train = m.training_latent;
      t_test = transform(m, x_test);
      p_train = predict_from_latent(m, t_train);
      p_test = predict_from_latent(m, t_test);
      metrics["route_used"] = std::string(to_string(m.route_used));
      metrics["eigenvalues"] = vector_json(m.retained_eigenvalues());
      metrics["spectrum"] = vector_json(m.eigenvalues);
      warnings = m.warnings;
      t_all = transform(m, d.dataset.features);
      model = std::move(m);
    }
    metrics["classifier"] = std::string(to_string(clf.family));
    metrics["train_accuracy"] = accuracy(y_train, p_train);
    metrics["test_accuracy"] = accuracy(y_test, p_test);
    // Downstream logistic probe on the latent map.
    ClassifierSpec probe;
    probe.seed = g.seed;
    const auto probe_models = fit_classifier(t_train, y_train, probe);
    metrics["probe_train_accuracy"] = accuracy(y_train, activate(evidence(probe_models, t_train)));
    metrics["probe_test_accuracy"] = accuracy(y_test, activate(evidence(probe_models, t_test)));
    label_values = label_matrix(d.dataset.labels);
  }
  metrics["n_components"] = t_all.cols();
  metrics["warnings"] = warnings;

  const fs::path model_file = out_path(g, "model.json");
  write_json(model_file, model_document(model, d.dataset));
  const fs::path emb_file = out_path(g, "embedding.csv");
  write_csv(emb_file, embedding_table(t_all, d.split, d.dataset.label_names, label_values,
                                      {"embedding alpha=" + format_double(config.alpha)}));
  const fs::path metrics_file = out_path(g, "metrics.json");
  write_json(metrics_file, metrics);
  if (!g.quiet) {
    out << "wrote " << model_file.string() << ", " << emb_file.string() << ", "
        << metrics_file.string() << '\n';
    if (classification) {
      out << "test accuracy " << short_num(metrics["test_accuracy"].get<double>())
          << ", probe test accuracy " << short_num(metrics["probe_test_accuracy"].get<double>())
          << '\n';
    }
    for (const auto& w : warnings) out << "warning: " << w << '\n';
  }
}

struct ApplyArgs {
  std::string model;
  std::string data;
  bool iris = false;
  std::string output;
};

Table apply_input(const ApplyArgs& a) {
  if (a.iris) return iris_table();
  if (a.data.empty()) throw InputError("--data is required");
  return load_table(a.data);
}

void cmd_transform(const GlobalOptions& g, const ApplyArgs& a, std::ostream& out) {
  const LoadedModel lm = read_model(a.model);
  const Table table = apply_input(a);
  const Matrix t = model_transform(lm.model, model_inputs(lm, table));
  Table result;
  result.columns = {"id"};
  for (const auto& c : latent_names(t.cols())) result.columns.push_back(c);
  result.values.resize(t.rows(), 1 + t.cols());
  for (Eigen::Index i = 0; i < t.rows(); ++i) result.values(i, 0) = static_cast<double>(i);
  result.values.rightCols(t.cols()) = t;
  const fs::path path = a.output.empty() ? out_path(g, "transform.csv") : fs::path(a.output);
  write_csv(path, result);
  if (!g.quiet) out << "wrote " << path.string() << " (" << t.rows() << " rows)\n";
}

void cmd_predict(const GlobalOptions& g, const ApplyArgs& a, std::ostream& out) {
  const LoadedModel lm = read_model(a.model);
  const Table table = apply_input(a);
  const Matrix x = model_inputs(lm, table);
  Matrix values;
  std::vector<std::string> names = lm.label_names;
  if (const auto* lin = std::get_if<PcovModel>(&lm.model); lin && lin->config.mode == Mode::Regression) {
    values = predict_targets(*lin, x);
  } else {
    const LabelData p = std::visit([&](const auto& m) { return predict(m, x); }, lm.model);
    values = p.labels.cast<double>();
  }
  if (static_cast<Eigen::Index>(names.size()) != values.cols()) {
    names.clear();
    for (Eigen::Index j = 0; j < values.cols(); ++j) names.push_back("prediction" + std::to_string(j + 1));
  }
  Table result;
  result.columns = {"id"};
  result.columns.insert(result.columns.end(), names.begin(), names.end());
  result.values.resize(values.rows(), 1 + values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) result.values(i, 0) = static_cast<double>(i);
  result.values.rightCols(values.cols()) = values;
  const fs::path path = a.output.empty() ? out_path(g, "predictions.csv") : fs::path(a.output);
  write_csv(path, result);
  if (!g.quiet) out << "wrote " << path.string() << " (" << values.rows() << " rows)\n";
}

struct SweepArgs {
  DataOptions data;
  ModelOptions model;
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  bool plots = true;
  int resolution = 200;
};

void cmd_sweep(const GlobalOptions& g, const SweepArgs& a, std::ostream& out) {
  if (parse_mode(a.model.mode) != Mode::Classification) {
    throw InputError("sweep runs in classification mode only");
  }
  const LoadedData d = load_data(a.data, g.seed, true);
  PcovSpec spec;
  spec.config = make_config(a.model, d.manifest);
  spec.classifier = make_classifier(a.model, g.seed);
  spec.kernel = make_kernel(a.model);
  ClassifierSpec probe;
  probe.seed = g.seed;
  const Matrix x_train = select_rows(d.dataset.features, d.split.train);
  const Matrix x_test = select_rows(d.dataset.features, d.split.test);
  const LabelData y_train = d.dataset.labels.rows(d.split.train);
  const LabelData y_test = d.dataset.labels.rows(d.split.test);
  const AlphaSweepReport report = alpha_sweep(x_train, y_train, x_test, y_test, a.alphas, spec, probe);

  json entries = json::array();
  for (const auto& e : report.entries) {
    json conf = json::array();
    for (const auto& c : e.confusion) conf.push_back(confusion_json(c));
    json entry = {{"alpha", e.alpha}, {"accuracy", e.accuracy}, {"confusion", conf}, {"warnings", e.warnings}};
    if (a.plots && e.train_embedding.cols() >= 2) {
      const std::string name = "sweep_alpha_" + short_num(e.alpha) + ".svg";
      const Eigen::Index n_train = e.train_embedding.rows();
      Matrix t(n_train + e.test_embedding.rows(), e.train_embedding.cols());
      t << e.train_embedding, e.test_embedding;
      IndexVector labels(t.rows());
      labels << y_train.column(0), y_test.column(0);
      std::vector<bool> is_test(static_cast<std::size_t>(t.rows()), false);
      std::fill(is_test.begin() + n_train, is_test.end(), true);
      PlotOptions opt;
      opt.title = "alpha = " + short_num(e.alpha) + ", test accuracy " + short_num(e.accuracy);
      if (e.train_embedding.cols() == 2 && !y_train.is_multilabel()) {
        const auto probe_models = fit_classifier(e.train_embedding, y_train, probe);
        opt.background = decision_grid(probe_models.front(), embedding_bounds(e.train_embedding),
                                       a.resolution, a.resolution);
      }
      write_text(out_path(g, name), render_scatter_svg(t, labels, is_test, opt));
      entry["plot"] = name;
    }
    entries.push_back(entry);
  }
  json baseline = json::array();
  for (const auto& c : report.baseline_confusion) baseline.push_back(confusion_json(c));
  const json doc = {{"alphas", report.alphas},
                    {"test_size", d.split.test.size()},
                    {"entries", entries},
                    {"baseline", {{"accuracy", report.baseline_accuracy}, {"confusion", baseline}}},
                    {"best_alpha", report.best_alpha},
                    {"warnings", report.warnings}};
  const fs::path path = out_path(g, "sweep.json");
  write_json(path, doc);
  if (!g.quiet) {
    for (const auto& e : report.entries) {
      out << "alpha " << short_num(e.alpha) << ": test accuracy " << short_num(e.accuracy) << '\n';
    }
    out << "full-dimensional probe: " << short_num(report.baseline_accuracy) << '\n';
    out << "best alpha " << short_num(report.best_alpha) << "; wrote " << path.string() << '\n';
  }
}

struct PairsArgs {
  std::string embedding;
  std::string label_column;
  int class_a = 1;
  int class_b = 0;
  int d = 2;
  int m = 8;
  bool unique = false;
  std::string split = "all";
  std::string output;
};

void cmd_pairs(const GlobalOptions& g, const PairsArgs& a, std::ostream& out) {
  const EmbeddingFile e = read_embedding(a.embedding);
  const IndexVector all_labels = embedding_labels(e, a.label_column);
  const std::vector<double> all_ids = ids_of(e.table);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < e.latent.rows(); ++i) {
    const bool test = e.is_test[static_cast<std::size_t>(i)];
    if (a.split == "all" || (a.split == "test") == test) keep.push_back(i);
  }
  const Matrix t = select_rows(e.latent, keep);
  IndexVector labels(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) labels(static_cast<Eigen::Index>(i)) = all_labels(keep[i]);
  const auto pairs = boundary_pairs(t, labels, a.class_a, a.class_b, a.d, a.m, a.unique);

  Table result;
  result.comments = {"boundary pairs: first " + std::to_string(a.d) + " latent components, classes " +
                     std::to_string(a.class_a) + " vs " + std::to_string(a.class_b)};
  result.columns = {"rank", "id_a", "id_b", "class_a", "class_b", "distance"};
  result.values.resize(static_cast<Eigen::Index>(pairs.size()), 6);
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto& p = pairs[r];
    result.values.row(static_cast<Eigen::Index>(r))
        << static_cast<double>(r + 1), all_ids[static_cast<std::size_t>(keep[static_cast<std::size_t>(p.index_a)])],
        all_ids[static_cast<std::size_t>(keep[static_cast<std::size_t>(p.index_b)])], p.class_a, p.class_b,
        p.distance;
  }
  const fs::path path = a.output.empty() ? out_path(g, "pairs.csv") : fs::path(a.output);
  write_csv(path, result);
  if (!g.quiet) out << "wrote " << path.string() << " (" << pairs.size() << " pairs)\n";
}

struct CorrelateArgs {
  std::string model;
  std::string data;
  bool iris = false;
  int dims = 2;
  int sort_by = 1;
  std::string output;
};

void cmd_correlate(const GlobalOptions& g, const CorrelateArgs& a, std::ostream& out) {
  const LoadedModel lm = read_model(a.model);
  const Table table = apply_input({a.model, a.data, a.iris, ""});
  const Matrix x = model_inputs(lm, table);
  const Matrix t = model_transform(lm.model, x);
  std::vector<std::string> names = lm.feature_names;
  const CorrelationTable corr = latent_feature_correlations(x, t, a.dims, names);
  if (a.sort_by < 1 || a.sort_by > a.dims) throw InputError("--sort-by must lie in [1, dims]");
  const auto order = corr.order_by(a.sort_by - 1);

  Table result;
  result.comments.push_back("absolute Pearson correlation between features and latent columns");
  result.comments.push_back("undefined_tK = 1 marks a constant feature or latent column (r reported as 0)");
  for (std::size_t j = 0; j < corr.feature_names.size(); ++j) {
    result.comments.push_back("feature " + std::to_string(j) + " = " + corr.feature_names[j]);
  }
  result.columns = {"feature"};
  for (int k = 1; k <= a.dims; ++k) result.columns.push_back("abs_r_t" + std::to_string(k));
  for (int k = 1; k <= a.dims; ++k) result.columns.push_back("undefined_t" + std::to_string(k));
  result.values.resize(static_cast<Eigen::Index>(order.size()), 1 + 2 * a.dims);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Eigen::Index f = order[r];
    const auto row = static_cast<Eigen::Index>(r);
    result.values(row, 0) = static_cast<double>(f);
    for (int k = 0; k < a.dims; ++k) {
      result.values(row, 1 + k) = corr.abs_r(f, k);
      result.values(row, 1 + a.dims + k) = corr.undefined(f, k) ? 1.0 : 0.0;
    }
  }
  const fs::path path = a.output.empty() ? out_path(g, "correlations.csv") : fs::path(a.output);
  write_csv(path, result);
  if (!g.quiet) out << "wrote " << path.string() << '\n';
}

struct PlotArgs {
  std::string embedding;
  std::string model;
  std::string label_column;
  bool probe = false;
  int resolution = kDefaultGridResolution;
  std::string title;
  std::string output;
};

void cmd_plot(const GlobalOptions& g, const PlotArgs& a, std::ostream& out) {
  const EmbeddingFile e = read_embedding(a.embedding);
  if (e.latent.cols() < 2) throw InputError("plot needs at least two latent columns");
  const IndexVector labels = embedding_labels(e, a.label_column);
  PlotOptions opt;
  opt.title = a.title;
  if (!a.model.empty() && a.probe) throw InputError("--model and --probe are mutually exclusive");
  std::vector<Eigen::Index> train_rows;
  for (Eigen::Index i = 0; i < e.latent.rows(); ++i) {
    if (!e.is_test[static_cast<std::size_t>(i)]) train_rows.push_back(i);
  }
  const Matrix t_train = select_rows(e.latent, train_rows.empty() ? std::vector<Eigen::Index>{} : train_rows);
  const GridBounds bounds = embedding_bounds(train_rows.empty() ? e.latent : t_train);
  if (!a.model.empty()) {
    const LoadedModel lm = read_model(a.model);
    if (const auto* lin = std::get_if<PcovModel>(&lm.model)) {
      if (lin->config.mode != Mode::Classification) throw InputError("background needs a classification model");
      opt.background = decision_grid(*lin, bounds, a.resolution, a.resolution);
    } else {
      opt.background = decision_grid(std::get<KernelPcovModel>(lm.model), bounds, a.resolution, a.resolution);
    }
  } else if (a.probe) {
    if (e.latent.cols() != 2) throw InputError("the probe background needs a 2-D embedding");
    IndexVector y(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = labels(train_rows[i]);
    ClassifierSpec probe;
    probe.seed = g.seed;
    const auto models = fit_classifier(t_train, LabelData::single(y), probe);
    opt.background = decision_grid(models.front(), bounds, a.resolution, a.resolution);
  }
  const std::string svg = render_scatter_svg(e.latent, labels, e.is_test, opt);
  const fs::path path = a.output.empty() ? out_path(g, "plot.svg") : fs::path(a.output);
  write_text(path, svg);
  if (!g.quiet) out << "wrote " << path.string() << " (" << e.latent.rows() << " markers)\n";
}

struct GenerateArgs {
  std::string kind;
  std::optional<int> n;
  int centers = 3;
  int dims = 2;
  double cluster_std = 1.0;
  double noise = 0.1;
  double positive_rate = 0.05;
  std::string output;
};

void cmd_generate(const GlobalOptions& g, const GenerateArgs& a, std::ostream& out) {
  Table table;
  if (a.kind == "blobs") {
    BlobsParams p;
    p.n_samples = a.n.value_or(p.n_samples);
    p.n_centers = a.centers;
    p.n_features = a.dims;
    p.cluster_std = a.cluster_std;
    table = make_blobs(p, g.seed);
  } else if (a.kind == "moons") {
    MoonsParams p;
    p.n_samples = a.n.value_or(p.n_samples);
    p.noise = a.noise;
    table = make_moons(p, g.seed);
  } else {
    ImbalancedCliffParams p;
    p.n_samples = a.n.value_or(p.n_samples);
    p.positive_rate = a.positive_rate;
    table = make_imbalanced_cliff(p, g.seed);
  }
  const fs::path path = a.output.empty() ? out_path(g, a.kind + ".csv") : fs::path(a.output);
  write_csv(path, table);
  if (!g.quiet) out << "wrote " << path.string() << " (" << table.values.rows() << " rows)\n";
}

void emit_error(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  err << json{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Principal covariates classification and regression toolkit", "pcov"};
  app.fallthrough();
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<TomlOrJsonConfig>());
  app.set_config("--config", "", "Configuration file (TOML or JSON)");

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for splits, solvers and generators");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model; write model, embedding and metrics");
  add_data_options(fit_cmd, fit.data);
  add_model_options(fit_cmd, fit.model);

  ApplyArgs tr;
  auto* tr_cmd = app.add_subcommand("transform", "Project rows of a CSV with a fitted model");
  tr_cmd->add_option("--model", tr.model, "Model file from fit")->required();
  tr_cmd->add_option("--data", tr.data, "CSV with the model's feature columns");
  tr_cmd->add_flag("--iris", tr.iris, "Use the bundled iris data");
  tr_cmd->add_option("--output,-o", tr.output, "Output CSV");

  ApplyArgs pr;
  auto* pr_cmd = app.add_subcommand("predict", "Predict labels (or targets) for rows of a CSV");
  pr_cmd->add_option("--model", pr.model, "Model file from fit")->required();
  pr_cmd->add_option("--data", pr.data, "CSV with the model's feature columns");
  pr_cmd->add_flag("--iris", pr.iris, "Use the bundled iris data");
  pr_cmd->add_option("--output,-o", pr.output, "Output CSV");

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Fit over a grid of alpha values and score a 2-D probe");
  add_data_options(sw_cmd, sw.data);
  add_model_options(sw_cmd, sw.model);
  sw_cmd->add_option("--alphas", sw.alphas, "Comma-separated alpha grid")->delimiter(',');
  sw_cmd->add_flag("!--no-plots", sw.plots, "Skip the per-alpha SVG files");
  sw_cmd->add_option("--resolution", sw.resolution, "Background grid resolution");

  PairsArgs pa;
  auto* pa_cmd = app.add_subcommand("pairs", "Closest cross-class pairs in an embedding");
  pa_cmd->add_option("--embedding", pa.embedding, "Embedding CSV from fit")->required();
  pa_cmd->add_option("--label-column", pa.label_column, "Label column (default: first)");
  pa_cmd->add_option("--class-a", pa.class_a, "First class");
  pa_cmd->add_option("--class-b", pa.class_b, "Second class");
  pa_cmd->add_option("-d,--dims", pa.d, "Leading latent components used for distances");
  pa_cmd->add_option("-m,--count", pa.m, "Number of pairs");
  pa_cmd->add_flag("--unique", pa.unique, "Use each sample in at most one pair");
  pa_cmd->add_option("--split", pa.split, "all, train or test")
      ->check(CLI::IsMember({"all", "train", "test"}));
  pa_cmd->add_option("--output,-o", pa.output, "Output CSV");

  CorrelateArgs co;
  auto* co_cmd = app.add_subcommand("correlate", "Feature versus latent-column correlations");
  co_cmd->add_option("--model", co.model, "Model file from fit")->required();
  co_cmd->add_option("--data", co.data, "CSV with the model's feature columns");
  co_cmd->add_flag("--iris", co.iris, "Use the bundled iris data");
  co_cmd->add_option("--dims", co.dims, "Latent columns to correlate");
  co_cmd->add_option("--sort-by", co.sort_by, "Sort rows by this latent column (1-based)");
  co_cmd->add_option("--output,-o", co.output, "Output CSV");

  PlotArgs pl;
  auto* pl_cmd = app.add_subcommand("plot", "SVG scatter of an embedding");
  pl_cmd->add_option("--embedding", pl.embedding, "Embedding CSV from fit")->required();
  pl_cmd->add_option("--model", pl.model, "Draw the model's decision regions");
  pl_cmd->add_flag("--probe", pl.probe, "Draw regions of a logistic probe fitted on train rows");
  pl_cmd->add_option("--label-column", pl.label_column, "Label column (default: first)");
  pl_cmd->add_option("--resolution", pl.resolution, "Background grid resolution");
  pl_cmd->add_option("--title", pl.title, "Plot title");
  pl_cmd->add_option("--output,-o", pl.output, "Output SVG");

  GenerateArgs ge;
  auto* ge_cmd = app.add_subcommand("generate", "Write a synthetic dataset");
  ge_cmd->add_option("kind", ge.kind, "blobs, moons or imbalanced-cliff")
      ->required()
      ->check(CLI::IsMember({"blobs", "moons", "imbalanced-cliff"}));
  ge_cmd->add_option("--n", ge.n, "Number of samples");
  ge_cmd->add_option("--centers", ge.centers, "Blob count");
  ge_cmd->add_option("--dims", ge.dims, "Blob dimensionality");
  ge_cmd->add_option("--cluster-std", ge.cluster_std, "Blob spread");
  ge_cmd->add_option("--noise", ge.noise, "Moons noise");
  ge_cmd->add_option("--positive-rate", ge.positive_rate, "Imbalanced-cliff positive rate");
  ge_cmd->add_option("--output,-o", ge.output, "Output CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    emit_error(err, 2, "usage", e.what());
    return 2;
  }

  try {
    if (fit_cmd->parsed()) cmd_fit(g, fit, out);
    else if (tr_cmd->parsed()) cmd_transform(g, tr, out);
    else if (pr_cmd->parsed()) cmd_predict(g, pr, out);
    else if (sw_cmd->parsed()) cmd_sweep(g, sw, out);
    else if (pa_cmd->parsed()) cmd_pairs(g, pa, out);
    else if (co_cmd->parsed()) cmd_correlate(g, co, out);
    else if (pl_cmd->parsed()) cmd_plot(g, pl, out);
    else if (ge_cmd->parsed()) cmd_generate(g, ge, out);
    return 0;
  } catch (const InputError& e) {
    emit_error(err, 2, "input", e.what());
    return 2;
  } catch (const ConvergenceError& e) {
    emit_error(err, 1, "convergence", e.what());
    return 1;
  } catch (const Error& e) {
    emit_error(err, 1, "runtime", e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    emit_error(err, 1, "io", e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error(err, 1, "runtime", e.what());
    return 1;
  }
}

}  // namespace pcov::cli
