#include "naf/baselines/storage.hpp"

#include <iomanip>
#include <sstream>

#include "naf/core/dataset.hpp"
#include "naf/core/error.hpp"

namespace naf::baselines {

namespace fs = std::filesystem;

nlohmann::json StorageReport::to_json() const {
  nlohmann::json j;
  j["dataset_bytes"] = dataset_bytes;
  j["irs_bytes"] = irs_bytes;
  j["methods"] = nlohmann::json::array();
  for (const auto& e : entries) j["methods"].push_back({{"method", e.method}, {"bytes", e.bytes}, {"files", e.files}});
  return j;
}

std::string StorageReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(28) << "method" << std::right << std::setw(14) << "bytes" << std::setw(12) << "MiB" << '\n';
  for (const auto& e : entries) {
    os << std::left << std::setw(28) << e.method << std::right << std::setw(14) << e.bytes << std::setw(12)
       << std::fixed << std::setprecision(3) << static_cast<double>(e.bytes) / (1024.0 * 1024.0) << '\n';
  }
  return os.str();
}

StorageReport storage_report(const fs::path& dataset_dir, const fs::path& model_path,
                             const std::vector<fs::path>& codec_blobs) {
  const std::vector<fs::path> container = {dataset_dir / kManifestFile, dataset_dir / kPosesFile, dataset_dir / kIrsFile};
  std::vector<fs::path> required = container;
  required.push_back(model_path);
  required.insert(required.end(), codec_blobs.begin(), codec_blobs.end());
  std::string missing;
  for (const auto& p : required) {
    if (!fs::is_regular_file(p)) missing += (missing.empty() ? "" : ", ") + p.string();
  }
  if (!missing.empty()) fail(ErrorKind::io, "missing files: " + missing);

  StorageReport r;
  std::vector<std::string> names;
  for (const auto& p : container) {
    r.dataset_bytes += fs::file_size(p);
    names.push_back(p.string());
  }
  r.irs_bytes = fs::file_size(dataset_dir / kIrsFile);
  r.entries.push_back({"naf", fs::file_size(model_path), {model_path.string()}});
  r.entries.push_back({"nearest", r.dataset_bytes, names});
  r.entries.push_back({"linear", r.dataset_bytes, names});
  for (const auto& p : codec_blobs) {
    r.entries.push_back({"codec:" + p.filename().string(), fs::file_size(p), {p.string()}});
  }
  return r;
}

}  // namespace naf::baselines
