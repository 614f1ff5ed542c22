#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"

#include "naf/field/model.hpp"

namespace naf::field {

inline constexpr int kModelFormatVersion = 1;

// Model file:
//   "NAF1" | u32 LE header length | JSON header | float32 LE payload
// The payload holds every tensor listed in header["tensors"] in order,
// followed by the norm-stat mean and std arrays.

nlohmann::json config_to_json(const ModelConfig& config);
/// Reads every field and validates; throws nlohmann::json errors on missing keys.
ModelConfig config_from_json(const nlohmann::json& j);

std::vector<std::uint8_t> encode_model(const FieldModel<float>& model);
/// Throws DecodeError on bad magic, malformed header, version mismatch or truncation.
FieldModel<float> decode_model(const std::vector<std::uint8_t>& bytes);

void save_model(const FieldModel<float>& model, const std::filesystem::path& path);
FieldModel<float> load_model(const std::filesystem::path& path);

/// Bytes before the JSON header: magic plus length field.
inline constexpr std::size_t kModelPreambleBytes = 8;

}  // namespace naf::field
