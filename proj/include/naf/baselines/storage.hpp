#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace naf::baselines {

struct StorageEntry {
  std::string method;
  std::uintmax_t bytes = 0;
  std::vector<std::string> files;
};

struct StorageReport {
  std::uintmax_t dataset_bytes = 0;  // every file of the dataset container
  std::uintmax_t irs_bytes = 0;      // irs.bin alone
  std::vector<StorageEntry> entries;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// On-disk sizes per method. The NAF entry is the model file; the
/// interpolation baselines need the whole training container. Each codec
/// blob becomes a "codec:<file name>" entry. Throws io listing every
/// missing path.
StorageReport storage_report(const std::filesystem::path& dataset_dir, const std::filesystem::path& model_path,
                             const std::vector<std::filesystem::path>& codec_blobs = {});

}  // namespace naf::baselines
