#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "json.hpp"
#include "pcov/pcov.hpp"

namespace pcov {

inline constexpr const char* kModelFormat = "pcov-model/1";

/// Standard base64 (RFC 4648) with padding.
std::string base64_encode(const unsigned char* data, std::size_t size);
std::string base64_decode(const std::string& text);

/// {"rows", "cols", "data"}: little-endian float64 in column-major order, base64.
nlohmann::json encode_matrix(const Matrix& m);
Matrix decode_matrix(const nlohmann::json& j);

nlohmann::json to_json(const PcovModel& model);
nlohmann::json to_json(const KernelPcovModel& model);
PcovModel linear_model_from_json(const nlohmann::json& j);
KernelPcovModel kernel_model_from_json(const nlohmann::json& j);

using AnyModel = std::variant<PcovModel, KernelPcovModel>;

nlohmann::json model_to_json(const AnyModel& model);
AnyModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace pcov
