#include "naf/field/model_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "naf/core/binary_io.hpp"
#include "naf/core/dataset.hpp"
#include "naf/core/error.hpp"

namespace naf::field {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'N', 'A', 'F', '1'};

}  // namespace

json config_to_json(const ModelConfig& c) {
  return {{"grid_mode", to_string(c.grid_mode)}, {"layers", c.layers},           {"width", c.width},
          {"grid_dim", c.grid_dim},             {"grid_spacing", c.grid_spacing}, {"grid_sigma", c.grid_sigma},
          {"n_freq", c.n_freq},                 {"pos_max_exp", c.pos_max_exp},   {"tf_max_exp", c.tf_max_exp},
          {"leaky_slope", c.leaky_slope}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.grid_mode = grid_mode_from_string(j.at("grid_mode").get<std::string>());
  c.layers = j.at("layers").get<int>();
  c.width = j.at("width").get<int>();
  c.grid_dim = j.at("grid_dim").get<int>();
  c.grid_spacing = j.at("grid_spacing").get<double>();
  c.grid_sigma = j.at("grid_sigma").get<double>();
  c.n_freq = j.at("n_freq").get<int>();
  c.pos_max_exp = j.at("pos_max_exp").get<double>();
  c.tf_max_exp = j.at("tf_max_exp").get<double>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.validate();
  return c;
}

namespace {

json frame_to_json(const FieldFrame& f) {
  return {{"width", f.width},         {"depth", f.depth},           {"sample_rate", f.sample_rate},
          {"n_samples", f.n_samples}, {"fft_size", f.stft.fft_size}, {"hop", f.stft.hop},
          {"window", f.stft.window}};
}

FieldFrame frame_from_json(const json& j) {
  FieldFrame f;
  f.width = j.at("width").get<double>();
  f.depth = j.at("depth").get<double>();
  f.sample_rate = j.at("sample_rate").get<int>();
  f.n_samples = j.at("n_samples").get<std::size_t>();
  f.stft.fft_size = j.at("fft_size").get<int>();
  f.stft.hop = j.at("hop").get<int>();
  f.stft.window = j.at("window").get<std::string>();
  f.stft.validate();
  return f;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const FieldModel<float>& model) {
  auto& params = const_cast<FieldParams<float>&>(model.params);
  json header;
  header["format_version"] = kModelFormatVersion;
  header["model"] = config_to_json(model.config);
  header["frame"] = frame_to_json(model.frame);
  json grids = json::array();
  for (const auto& g : params.grids) {
    grids.push_back({{"origin", {g.origin.x, g.origin.y}}, {"spacing", g.spacing}, {"nx", g.nx}, {"ny", g.ny}});
  }
  header["grids"] = grids;
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : params.named()) {
    tensors.push_back({{"name", name}, {"shape", t->shape}, {"offset", offset}});
    offset += t->size();
  }
  header["tensors"] = tensors;
  const std::size_t stat = model.norm.mean.size();
  header["norm_stats"] = {{"shape", {model.norm.mean.rows, model.norm.mean.cols}},
                          {"mean_offset", offset},
                          {"std_offset", offset + stat}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  binary::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + 4 * (offset + 2 * stat));
  for (const auto& [name, t] : params.named()) {
    for (float v : t->values) binary::put_f32(out, v);
  }
  for (float v : model.norm.mean.data) binary::put_f32(out, v);
  for (float v : model.norm.std.data) binary::put_f32(out, v);
  return out;
}

FieldModel<float> decode_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kModelPreambleBytes) throw DecodeError(DecodeFailure::truncated, "model file shorter than its preamble");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw DecodeError(DecodeFailure::bad_magic, "not a model file (bad magic)");
  const std::size_t len = binary::get_u32(bytes.data() + 4);
  if (len > bytes.size() - kModelPreambleBytes) {
    throw DecodeError(DecodeFailure::malformed_header, "model header length exceeds the file size");
  }
  json header;
  try {
    header = json::parse(bytes.begin() + kModelPreambleBytes, bytes.begin() + static_cast<std::ptrdiff_t>(kModelPreambleBytes + len));
  } catch (const json::exception& e) {
    throw DecodeError(DecodeFailure::malformed_header, std::string("model header is not valid JSON: ") + e.what());
  }

  FieldModel<float> model;
  std::size_t stat_rows = 0, stat_cols = 0, mean_offset = 0, std_offset = 0;
  try {
    if (header.at("format_version").get<int>() != kModelFormatVersion) {
      throw DecodeError(DecodeFailure::version_mismatch,
                        "model format version " + header.at("format_version").dump() + " is not supported");
    }
    const ModelConfig config = config_from_json(header.at("model"));
    const FieldFrame frame = frame_from_json(header.at("frame"));
    // Build the parameter skeleton, then check every declared shape against it.
    model = init_model(config, frame, 0);
    const auto& grids = header.at("grids");
    if (grids.size() != model.params.grids.size()) {
      throw DecodeError(DecodeFailure::malformed_header, "grid count does not match the grid mode");
    }
    for (std::size_t k = 0; k < grids.size(); ++k) {
      auto& g = model.params.grids[k];
      g.origin = {grids[k].at("origin").at(0).get<double>(), grids[k].at("origin").at(1).get<double>()};
      g.spacing = grids[k].at("spacing").get<double>();
      if (grids[k].at("nx").get<std::size_t>() != g.nx || grids[k].at("ny").get<std::size_t>() != g.ny) {
        throw DecodeError(DecodeFailure::malformed_header, "grid lattice does not match the scene bounds");
      }
    }
    const auto named = model.params.named();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != named.size()) {
      throw DecodeError(DecodeFailure::malformed_header, "tensor list does not match the model configuration");
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
      if (tensors[i].at("name").get<std::string>() != named[i].first ||
          tensors[i].at("shape").get<diffcalc::Shape>() != named[i].second->shape) {
        throw DecodeError(DecodeFailure::malformed_header, "unexpected tensor entry " + tensors[i].dump());
      }
    }
    stat_rows = header.at("norm_stats").at("shape").at(0).get<std::size_t>();
    stat_cols = header.at("norm_stats").at("shape").at(1).get<std::size_t>();
    mean_offset = header.at("norm_stats").at("mean_offset").get<std::size_t>();
    std_offset = header.at("norm_stats").at("std_offset").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DecodeError(DecodeFailure::malformed_header, std::string("model header: ") + e.what());
  } catch (const DecodeError&) {
    throw;
  } catch (const Error& e) {
    throw DecodeError(DecodeFailure::malformed_header, std::string("model header: ") + e.what());
  }

  const std::size_t n_params = model.params.count();
  const std::size_t stat = stat_rows * stat_cols;
  if (mean_offset != n_params || std_offset != n_params + stat) {
    throw DecodeError(DecodeFailure::malformed_header, "norm-stat offsets do not follow the parameters");
  }
  const std::size_t payload = 4 * (n_params + 2 * stat);
  const std::size_t body = bytes.size() - kModelPreambleBytes - len;
  if (body < payload) {
    throw DecodeError(DecodeFailure::truncated, "model payload holds " + std::to_string(body) + " bytes, expected " +
                                                    std::to_string(payload));
  }
  if (body > payload) throw DecodeError(DecodeFailure::malformed_header, "trailing bytes after the model payload");
  const std::uint8_t* p = bytes.data() + kModelPreambleBytes + len;
  for (auto& [name, t] : model.params.named()) {
    for (float& v : t->values) {
      v = binary::get_f32(p);
      p += 4;
    }
  }
  model.norm.mean = Array2D<float>(stat_rows, stat_cols);
  model.norm.std = Array2D<float>(stat_rows, stat_cols);
  for (float& v : model.norm.mean.data) {
    v = binary::get_f32(p);
    p += 4;
  }
  for (float& v : model.norm.std.data) {
    v = binary::get_f32(p);
    p += 4;
  }
  return model;
}

void save_model(const FieldModel<float>& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::io, "cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(ErrorKind::io, "write failed for " + path.string());
}

FieldModel<float> load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace naf::field
