#include "naf/core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "naf/core/binary_io.hpp"
#include "naf/core/rng.hpp"

namespace naf {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<ImpulseResponseRecord> Dataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<ImpulseResponseRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(records.at(i));
  return out;
}

Split split_dataset(std::size_t n_records, double test_fraction, std::uint64_t seed) {
  if (n_records < 2) fail(ErrorKind::invalid_dataset, "split needs at least 2 records");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorKind::invalid_config, "test fraction must lie in (0,1)");
  }
  std::vector<std::size_t> perm(n_records);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n_records - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.below(i + 1)]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n_records)));
  Split split;
  split.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

json scene_to_json(const SceneGeometry& scene) {
  json occ = json::array();
  for (const Segment& s : scene.occluders) {
    occ.push_back(json::array({json::array({s.a.x, s.a.y}), json::array({s.b.x, s.b.y})}));
  }
  return json{{"width", scene.width},
              {"depth", scene.depth},
              {"height", scene.height},
              {"absorption", scene.absorption},
              {"occluders", occ}};
}

SceneGeometry scene_from_json(const json& j) {
  SceneGeometry scene;
  scene.width = j.at("width").get<double>();
  scene.depth = j.at("depth").get<double>();
  scene.height = j.at("height").get<double>();
  const auto& abs = j.at("absorption");
  if (!abs.is_array() || abs.size() != 6) fail(ErrorKind::invalid_config, "scene absorption needs 6 values");
  for (std::size_t i = 0; i < 6; ++i) scene.absorption[i] = abs[i].get<double>();
  if (j.contains("occluders")) {
    for (const auto& o : j.at("occluders")) {
      scene.occluders.push_back({{o.at(0).at(0).get<double>(), o.at(0).at(1).get<double>()},
                                 {o.at(1).at(0).get<double>(), o.at(1).at(1).get<double>()}});
    }
  }
  scene.validate();
  return scene;
}

SceneGeometry load_scene(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open scene file " + path.string());
  try {
    return scene_from_json(json::parse(in));
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_config, "bad scene file " + path.string() + ": " + e.what());
  }
}

json manifest_to_json(const DatasetManifest& m) {
  return json{{"format_version", m.format_version},
              {"sample_rate", m.sample_rate},
              {"n_samples", m.n_samples},
              {"n_records", m.n_records},
              {"fft_size", m.stft.fft_size},
              {"hop", m.stft.hop},
              {"window", m.stft.window},
              {"split_seed", m.split_seed},
              {"test_indices", m.test_indices},
              {"scene", scene_to_json(m.scene)}};
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kDatasetFormatVersion) {
      throw DecodeError(DecodeFailure::version_mismatch,
                        "dataset format_version " + std::to_string(m.format_version) + " is not supported");
    }
    m.sample_rate = j.at("sample_rate").get<double>();
    m.n_samples = j.at("n_samples").get<std::size_t>();
    m.n_records = j.at("n_records").get<std::size_t>();
    m.stft.fft_size = j.at("fft_size").get<int>();
    m.stft.hop = j.at("hop").get<int>();
    m.stft.window = j.at("window").get<std::string>();
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.test_indices = j.at("test_indices").get<std::vector<std::size_t>>();
    m.scene = scene_from_json(j.at("scene"));
  } catch (const json::exception& e) {
    throw DecodeError(DecodeFailure::malformed_header, std::string("malformed manifest: ") + e.what());
  } catch (const DecodeError&) {
    throw;
  } catch (const Error& e) {
    throw DecodeError(DecodeFailure::malformed_header, std::string("malformed manifest: ") + e.what());
  }
  std::vector<bool> is_test(m.n_records, false);
  for (std::size_t i : m.test_indices) {
    if (i >= m.n_records || is_test[i]) {
      throw DecodeError(DecodeFailure::malformed_header, "test_indices out of range or repeated");
    }
    is_test[i] = true;
  }
  for (std::size_t i = 0; i < m.n_records; ++i) {
    if (!is_test[i]) m.train_indices.push_back(i);
  }
  return m;
}

namespace {

void check_consistency(const DatasetManifest& m, const std::vector<ImpulseResponseRecord>& records) {
  m.scene.validate();
  m.stft.validate();
  if (records.size() != m.n_records) fail(ErrorKind::invalid_dataset, "record count disagrees with manifest");
  std::vector<int> seen(m.n_records, 0);
  for (std::size_t i : m.train_indices) {
    if (i >= m.n_records) fail(ErrorKind::invalid_dataset, "train index out of range");
    ++seen[i];
  }
  for (std::size_t i : m.test_indices) {
    if (i >= m.n_records) fail(ErrorKind::invalid_dataset, "test index out of range");
    ++seen[i];
  }
  if (!std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; })) {
    fail(ErrorKind::invalid_dataset, "train/test indices must partition the records");
  }
  for (const ImpulseResponseRecord& r : records) {
    r.validate();
    if (r.n_samples() != m.n_samples) fail(ErrorKind::invalid_dataset, "record length disagrees with manifest");
    if (!m.scene.contains(r.pose.emitter) || !m.scene.contains(r.pose.listener)) {
      fail(ErrorKind::invalid_dataset, "record pose outside the scene footprint");
    }
  }
}

}  // namespace

void write_dataset(const DatasetManifest& manifest, const std::vector<ImpulseResponseRecord>& records,
                   const fs::path& dir) {
  check_consistency(manifest, records);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / kManifestFile, std::ios::binary);
    out << manifest_to_json(manifest).dump(2) << '\n';
    if (!out) fail(ErrorKind::io, "failed writing manifest in " + dir.string());
  }
  {
    std::ofstream out(dir / kPosesFile, std::ios::binary);
    std::vector<float> row(5);
    for (const auto& r : records) {
      row = {static_cast<float>(r.pose.emitter.x), static_cast<float>(r.pose.emitter.y),
             static_cast<float>(r.pose.listener.x), static_cast<float>(r.pose.listener.y),
             static_cast<float>(r.pose.orientation)};
      binary::write_f32(out, row);
    }
    if (!out) fail(ErrorKind::io, "failed writing poses in " + dir.string());
  }
  {
    std::ofstream out(dir / kIrsFile, std::ios::binary);
    for (const auto& r : records) {
      binary::write_f32(out, r.channels[0]);
      binary::write_f32(out, r.channels[1]);
    }
    if (!out) fail(ErrorKind::io, "failed writing impulse responses in " + dir.string());
  }
}

DatasetManifest read_manifest(const fs::path& dir) {
  std::ifstream in(dir / kManifestFile, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + (dir / kManifestFile).string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::exception& e) {
    throw DecodeError(DecodeFailure::malformed_header, std::string("manifest is not valid JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  ds.manifest = read_manifest(dir);
  const auto& m = ds.manifest;
  const std::size_t n = m.n_records;

  std::ifstream poses(dir / kPosesFile, std::ios::binary);
  std::ifstream irs(dir / kIrsFile, std::ios::binary);
  if (!poses || !irs) fail(ErrorKind::io, "missing payload files in " + dir.string());

  std::vector<ImpulseResponseRecord> records(n);
  std::vector<float> row(5);
  for (std::size_t i = 0; i < n; ++i) {
    if (!binary::read_f32(poses, row)) {
      throw DecodeError(DecodeFailure::truncated, "poses.bin is truncated at record " + std::to_string(i));
    }
    auto& r = records[i];
    r.pose.emitter = {row[0], row[1]};
    r.pose.listener = {row[2], row[3]};
    const float o = row[4];
    if (!(o == 0.0f || o == 1.0f || o == 2.0f || o == 3.0f)) {
      throw DecodeError(DecodeFailure::malformed_header, "invalid orientation in poses.bin");
    }
    r.pose.orientation = static_cast<int>(o);
    r.sample_rate = m.sample_rate;
    for (auto& ch : r.channels) {
      ch.resize(m.n_samples);
      if (!binary::read_f32(irs, ch)) {
        throw DecodeError(DecodeFailure::truncated, "irs.bin is truncated at record " + std::to_string(i));
      }
    }
  }
  ds.records = std::move(records);
  return ds;
}

}  // namespace naf
