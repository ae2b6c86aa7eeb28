#include "pcov/serialize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>

#include "pcov/error.hpp"

namespace pcov {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(const unsigned char* data, std::size_t size) {
  std::string out;
  out.reserve((size + 2) / 3 * 4);
  for (std::size_t i = 0; i < size; i += 3) {
    const std::uint32_t b0 = data[i];
    const std::uint32_t b1 = i + 1 < size ? data[i + 1] : 0;
    const std::uint32_t b2 = i + 2 < size ? data[i + 2] : 0;
    const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
    out += kAlphabet[(triple >> 18) & 63];
    out += kAlphabet[(triple >> 12) & 63];
    out += i + 1 < size ? kAlphabet[(triple >> 6) & 63] : '=';
    out += i + 2 < size ? kAlphabet[triple & 63] : '=';
  }
  return out;
}

std::string base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw InputError("base64: length is not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> v{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[static_cast<std::size_t>(k)] = 0;
        ++pad;
        continue;
      }
      if (pad) throw InputError("base64: data after padding");
      v[static_cast<std::size_t>(k)] = decode_char(c);
      if (v[static_cast<std::size_t>(k)] < 0) throw InputError("base64: invalid character");
    }
    const std::uint32_t triple = (static_cast<std::uint32_t>(v[0]) << 18) |
                                 (static_cast<std::uint32_t>(v[1]) << 12) |
                                 (static_cast<std::uint32_t>(v[2]) << 6) |
                                 static_cast<std::uint32_t>(v[3]);
    out += static_cast<char>((triple >> 16) & 0xFF);
    if (pad < 2) out += static_cast<char>((triple >> 8) & 0xFF);
    if (pad < 1) out += static_cast<char>(triple & 0xFF);
  }
  return out;
}

json encode_matrix(const Matrix& m) {
  std::string bytes(static_cast<std::size_t>(m.size()) * 8, '\0');
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(m.data()[i]);
    for (int b = 0; b < 8; ++b) {
      bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] =
          static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  }
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", base64_encode(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size())}};
}

Matrix decode_matrix(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0) throw InputError("matrix has negative shape");
  const std::string bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * 8) {
    throw InputError("matrix payload size does not match its shape");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(
                  bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)]))
              << (8 * b);
    }
    m.data()[i] = std::bit_cast<double>(bits);
  }
  return m;
}

namespace {

json encode_row(const RowVector& v) { return encode_matrix(Matrix(v)); }
json encode_vec(const Vector& v) { return encode_matrix(Matrix(v)); }

RowVector decode_row(const json& j) {
  const Matrix m = decode_matrix(j);
  if (m.rows() > 1) throw InputError("expected a row vector");
  return m.size() == 0 ? RowVector(0) : RowVector(m.row(0));
}

Vector decode_vec(const json& j) {
  const Matrix m = decode_matrix(j);
  if (m.cols() > 1) throw InputError("expected a column vector");
  return m.size() == 0 ? Vector(0) : Vector(m.col(0));
}

json encode_config(const PcovConfig& c) {
  return {{"alpha", c.alpha},
          {"n_components", c.n_components},
          {"route", std::string(to_string(c.route))},
          {"mode", std::string(to_string(c.mode))},
          {"rcond", c.rcond},
          {"standardize", c.standardize},
          {"regression_lambda", c.regression_lambda}};
}

PcovConfig decode_config(const json& j) {
  PcovConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.n_components = j.at("n_components").get<int>();
  c.route = parse_route(j.at("route").get<std::string>());
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.rcond = j.at("rcond").get<double>();
  c.standardize = j.at("standardize").get<bool>();
  c.regression_lambda = j.at("regression_lambda").get<double>();
  return c;
}

json encode_recipe(const ScalingRecipe& r) {
  return {{"column_means", encode_row(r.column_means)},
          {"column_scales", encode_row(r.column_scales)},
          {"global_scale", r.global_scale}};
}

ScalingRecipe decode_recipe(const json& j) {
  ScalingRecipe r;
  r.column_means = decode_row(j.at("column_means"));
  r.column_scales = decode_row(j.at("column_scales"));
  r.global_scale = j.at("global_scale").get<double>();
  if (r.column_means.size() != r.column_scales.size()) {
    throw InputError("scaling recipe has inconsistent lengths");
  }
  return r;
}

json encode_classifier(const LinearClassifierModel& m) {
  return {{"family", std::string(to_string(m.family))},
          {"n_classes", m.n_classes},
          {"weights", encode_matrix(m.weights)},
          {"intercept", encode_vec(m.intercept)},
          {"regularization", m.regularization},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"used_pseudoinverse", m.used_pseudoinverse}};
}

LinearClassifierModel decode_classifier(const json& j) {
  LinearClassifierModel m;
  m.family = parse_classifier_family(j.at("family").get<std::string>());
  m.n_classes = j.at("n_classes").get<int>();
  m.weights = decode_matrix(j.at("weights"));
  m.intercept = decode_vec(j.at("intercept"));
  m.regularization = j.at("regularization").get<double>();
  m.iterations = j.at("iterations").get<int>();
  m.converged = j.at("converged").get<bool>();
  m.used_pseudoinverse = j.at("used_pseudoinverse").get<bool>();
  return m;
}

json encode_classifiers(const std::vector<LinearClassifierModel>& models) {
  json arr = json::array();
  for (const auto& m : models) arr.push_back(encode_classifier(m));
  return arr;
}

std::vector<LinearClassifierModel> decode_classifiers(const json& j) {
  std::vector<LinearClassifierModel> out;
  for (const auto& e : j) out.push_back(decode_classifier(e));
  return out;
}

json encode_kernel(const KernelSpec& k) {
  json j = {{"family", std::string(to_string(k.family))}, {"degree", k.degree}, {"coef0", k.coef0}};
  j["gamma"] = k.gamma ? json(*k.gamma) : json(nullptr);
  return j;
}

KernelSpec decode_kernel(const json& j) {
  KernelSpec k;
  k.family = parse_kernel_family(j.at("family").get<std::string>());
  k.degree = j.at("degree").get<int>();
  k.coef0 = j.at("coef0").get<double>();
  if (!j.at("gamma").is_null()) k.gamma = j.at("gamma").get<double>();
  k.validate();
  return k;
}

void check_format(const json& j, const char* kind) {
  if (!j.is_object() || j.value("format", "") != kModelFormat) {
    throw InputError("not a model document (missing format tag '" + std::string(kModelFormat) + "')");
  }
  if (j.value("kind", "") != kind) {
    throw InputError("model document has kind '" + j.value("kind", "") + "', expected '" + kind + "'");
  }
}

}  // namespace

json to_json(const PcovModel& m) {
  return {{"format", kModelFormat},
          {"kind", "linear"},
          {"config", encode_config(m.config)},
          {"route_used", std::string(to_string(m.route_used))},
          {"recipe", encode_recipe(m.recipe)},
          {"pxt", encode_matrix(m.pxt)},
          {"ptx", encode_matrix(m.ptx)},
          {"ptz", encode_matrix(m.ptz)},
          {"target_offset", encode_row(m.target_offset)},
          {"eigenvalues", encode_vec(m.eigenvalues)},
          {"target_scale", m.target_scale},
          {"classifiers", encode_classifiers(m.classifiers)},
          {"classes_per_label", m.classes_per_label},
          {"regression_weights", encode_matrix(m.regression_weights)},
          {"warnings", m.warnings},
          {"training_latent", encode_matrix(m.training_latent)}};
}

json to_json(const KernelPcovModel& m) {
  return {{"format", kModelFormat},
          {"kind", "kernel"},
          {"config", encode_config(m.config)},
          {"kernel", encode_kernel(m.kernel)},
          {"recipe", encode_recipe(m.recipe)},
          {"training_features", encode_matrix(m.training_features)},
          {"centering",
           {{"column_means", encode_row(m.centering.column_means)},
            {"grand_mean", m.centering.grand_mean}}},
          {"kernel_scale", m.kernel_scale},
          {"target_scale", m.target_scale},
          {"pkt", encode_matrix(m.pkt)},
          {"ptx", encode_matrix(m.ptx)},
          {"ptz", encode_matrix(m.ptz)},
          {"target_offset", encode_row(m.target_offset)},
          {"eigenvalues", encode_vec(m.eigenvalues)},
          {"classifiers", encode_classifiers(m.classifiers)},
          {"classes_per_label", m.classes_per_label},
          {"warnings", m.warnings},
          {"training_latent", encode_matrix(m.training_latent)}};
}

PcovModel linear_model_from_json(const json& j) {
  check_format(j, "linear");
  try {
    PcovModel m;
    m.config = decode_config(j.at("config"));
    m.route_used = parse_route(j.at("route_used").get<std::string>());
    m.recipe = decode_recipe(j.at("recipe"));
    m.pxt = decode_matrix(j.at("pxt"));
    m.ptx = decode_matrix(j.at("ptx"));
    m.ptz = decode_matrix(j.at("ptz"));
    m.target_offset = decode_row(j.at("target_offset"));
    m.eigenvalues = decode_vec(j.at("eigenvalues"));
    m.target_scale = j.at("target_scale").get<double>();
    m.classifiers = decode_classifiers(j.at("classifiers"));
    m.classes_per_label = j.at("classes_per_label").get<std::vector<int>>();
    m.regression_weights = decode_matrix(j.at("regression_weights"));
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    m.training_latent = decode_matrix(j.at("training_latent"));
    if (m.pxt.rows() != m.recipe.n_features() || m.ptx.cols() != m.pxt.rows() ||
        m.ptx.rows() != m.pxt.cols() || m.ptz.rows() != m.pxt.cols()) {
      throw InputError("model document has inconsistent projector shapes");
    }
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  }
}

KernelPcovModel kernel_model_from_json(const json& j) {
  check_format(j, "kernel");
  try {
    KernelPcovModel m;
    m.config = decode_config(j.at("config"));
    m.kernel = decode_kernel(j.at("kernel"));
    m.recipe = decode_recipe(j.at("recipe"));
    m.training_features = decode_matrix(j.at("training_features"));
    m.centering.column_means = decode_row(j.at("centering").at("column_means"));
    m.centering.grand_mean = j.at("centering").at("grand_mean").get<double>();
    m.kernel_scale = j.at("kernel_scale").get<double>();
    m.target_scale = j.at("target_scale").get<double>();
    m.pkt = decode_matrix(j.at("pkt"));
    m.ptx = decode_matrix(j.at("ptx"));
    m.ptz = decode_matrix(j.at("ptz"));
    m.target_offset = decode_row(j.at("target_offset"));
    m.eigenvalues = decode_vec(j.at("eigenvalues"));
    m.classifiers = decode_classifiers(j.at("classifiers"));
    m.classes_per_label = j.at("classes_per_label").get<std::vector<int>>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    m.training_latent = decode_matrix(j.at("training_latent"));
    if (m.pkt.rows() != m.centering.column_means.size() || m.ptz.rows() != m.pkt.cols()) {
      throw InputError("model document has inconsistent projector shapes");
    }
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  }
}

json model_to_json(const AnyModel& model) {
  return std::visit([](const auto& m) { return to_json(m); }, model);
}

AnyModel model_from_json(const json& j) {
  if (j.is_object() && j.value("kind", "") == "kernel") return kernel_model_from_json(j);
  return linear_model_from_json(j);
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file '" + path.string() + "'");
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("model file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace pcov
