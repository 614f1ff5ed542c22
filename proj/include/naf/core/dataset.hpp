#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "naf/core/error.hpp"
#include "naf/core/types.hpp"

namespace naf {

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  SceneGeometry scene;
  double sample_rate = 16000.0;
  std::size_t n_samples = 0;
  std::size_t n_records = 0;
  StftConfig stft;
  std::uint64_t split_seed = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<ImpulseResponseRecord> records;

  std::vector<ImpulseResponseRecord> subset(const std::vector<std::size_t>& indices) const;
  std::vector<ImpulseResponseRecord> train_records() const { return subset(manifest.train_indices); }
  std::vector<ImpulseResponseRecord> test_records() const { return subset(manifest.test_indices); }
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded random holdout. |test| = round(test_fraction * n_records); both
/// index lists are returned sorted.
Split split_dataset(std::size_t n_records, double test_fraction, std::uint64_t seed);

enum class DecodeFailure { malformed_header, truncated, version_mismatch, bad_magic };

class DecodeError : public Error {
 public:
  DecodeError(DecodeFailure failure, const std::string& message)
      : Error(ErrorKind::decode, message), failure_(failure) {}

  DecodeFailure failure() const noexcept { return failure_; }

 private:
  DecodeFailure failure_;
};

// Container layout (one directory):
//   manifest.json  UTF-8 JSON
//   poses.bin      float32 LE [n_records, 5]: ex, ey, lx, ly, orientation
//   irs.bin        float32 LE [n_records, 2, n_samples]
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kPosesFile = "poses.bin";
inline constexpr const char* kIrsFile = "irs.bin";

nlohmann::json scene_to_json(const SceneGeometry& scene);
SceneGeometry scene_from_json(const nlohmann::json& j);
SceneGeometry load_scene(const std::filesystem::path& path);

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);

/// Validates records against the manifest, then writes the three files.
void write_dataset(const DatasetManifest& manifest, const std::vector<ImpulseResponseRecord>& records,
                   const std::filesystem::path& dir);

/// Reads a container; throws DecodeError without returning partial data.
Dataset read_dataset(const std::filesystem::path& dir);

/// Reads only the manifest (cheap; used by storage accounting).
DatasetManifest read_manifest(const std::filesystem::path& dir);

}  // namespace naf
