// naf: command-line front end for dataset generation, training, evaluation,
// rendering and analysis.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "naf/analysis/ablation.hpp"
#include "naf/analysis/evaluate.hpp"
#include "naf/analysis/probe.hpp"
#include "naf/baselines/codec.hpp"
#include "naf/baselines/storage.hpp"
#include "naf/core/dataset.hpp"
#include "naf/core/error.hpp"
#include "naf/core/parallel.hpp"
#include "naf/dsp/signal.hpp"
#include "naf/dsp/wav.hpp"
#include "naf/field/inference.hpp"
#include "naf/field/loudness_map.hpp"
#include "naf/field/model_io.hpp"
#include "naf/field/training.hpp"
#include "naf/roomsim/roomsim.hpp"

#ifndef NAF_GIT_DESCRIBE
#define NAF_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace naf::cli {
namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::usage, flag + ": '" + item + "' is not a number");
    }
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& flag, std::size_t count) {
  auto v = parse_numbers(text, flag);
  if (v.size() != count) {
    fail(ErrorKind::usage, flag + " expects " + std::to_string(count) + " comma-separated numbers");
  }
  return v;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_json(const json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) fail(ErrorKind::io, "write failed for " + path.string());
}

void write_bytes(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(ErrorKind::io, "write failed for " + path.string());
}

json run_header(const std::string& command) {
  return {{"command", command},
          {"version", NAF_GIT_DESCRIBE},
          {"formats", {{"dataset", kDatasetFormatVersion}, {"model", field::kModelFormatVersion}}}};
}

// Resolved config for file outputs sits beside the file as <name>.run.json.
fs::path run_path_for(const fs::path& out) {
  return out.parent_path() / (out.filename().string() + ".run.json");
}

std::uintmax_t container_bytes(const fs::path& dir) {
  std::uintmax_t total = 0;
  for (const char* name : {kManifestFile, kPosesFile, kIrsFile}) total += fs::file_size(dir / name);
  return total;
}

json train_config_json(const field::TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"irs_per_batch", c.irs_per_batch},
          {"coords_per_ir", c.coords_per_ir},
          {"lr", c.lr},
          {"lr_decay", c.lr_decay},
          {"coord_noise_std", c.coord_noise_std},
          {"coord_noise_applies_to", {"positions", "t", "f"}},
          {"pad_prob", c.pad_prob},
          {"seed", c.seed},
          {"chunk_irs", c.chunk_irs},
          {"workers", c.workers},
          {"model", field::config_to_json(c.model)}};
}

// Flags shared by train and ablate. Precedence: scale preset, then the
// config file, then explicit flags.
struct TrainFlags {
  std::string config_path;
  std::string scale = "desk";
  std::string grid_mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  int workers = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "training config JSON")->check(CLI::ExistingFile);
    cmd->add_option("--scale", scale, "model size preset")->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--grid-mode", grid_mode, "latent grid mode")->check(CLI::IsMember({"shared", "dual", "none"}));
    cmd->add_option("--seed", seed, "training seed");
    cmd->add_option("--epochs", epochs, "number of epochs");
    cmd->add_option("--workers", workers, "worker threads (default: $NAF_WORKERS or all cores)");
  }

  field::TrainConfig resolve(bool scale_flag_given) const {
    field::TrainConfig c;
    c.model = scale == "paper" ? field::ModelConfig::paper() : field::ModelConfig::desk();
    if (!config_path.empty()) apply_file(c, scale_flag_given);
    if (!grid_mode.empty()) c.model.grid_mode = field::grid_mode_from_string(grid_mode);
    if (seed) c.seed = *seed;
    if (epochs) c.epochs = *epochs;
    c.workers = resolve_workers(workers);
    c.validate();
    c.model.validate();
    return c;
  }

 private:
  void apply_file(field::TrainConfig& c, bool scale_flag_given) const {
    json j;
    {
      std::ifstream is(config_path);
      if (!is) fail(ErrorKind::io, "cannot read " + config_path);
      try {
        j = json::parse(is);
      } catch (const json::exception& e) {
        fail(ErrorKind::invalid_config, config_path + ": " + e.what());
      }
    }
    if (!j.is_object()) fail(ErrorKind::invalid_config, config_path + ": expected a JSON object");
    if (j.contains("scale") && j.contains("model")) {
      fail(ErrorKind::invalid_config, config_path + ": 'scale' and 'model' contradict each other; give one");
    }
    try {
      if (j.contains("scale") && !scale_flag_given) {
        const auto s = j["scale"].get<std::string>();
        if (s != "desk" && s != "paper") fail(ErrorKind::invalid_config, "scale must be desk or paper");
        const auto mode = c.model.grid_mode;
        c.model = s == "paper" ? field::ModelConfig::paper() : field::ModelConfig::desk();
        c.model.grid_mode = mode;
      }
      for (auto& [key, value] : j.items()) {
        if (key == "scale") continue;
        if (key == "epochs") c.epochs = value.get<int>();
        else if (key == "irs_per_batch") c.irs_per_batch = value.get<int>();
        else if (key == "coords_per_ir") c.coords_per_ir = value.get<int>();
        else if (key == "lr") c.lr = value.get<double>();
        else if (key == "lr_decay") c.lr_decay = value.get<double>();
        else if (key == "coord_noise_std") c.coord_noise_std = value.get<double>();
        else if (key == "pad_prob") c.pad_prob = value.get<double>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "chunk_irs") c.chunk_irs = value.get<int>();
        else if (key == "grid_mode") c.model.grid_mode = field::grid_mode_from_string(value.get<std::string>());
        else if (key == "model") apply_model(c.model, value);
        else fail(ErrorKind::invalid_config, config_path + ": unknown key '" + key + "'");
      }
    } catch (const json::exception& e) {
      fail(ErrorKind::invalid_config, config_path + ": " + e.what());
    }
  }

  void apply_model(field::ModelConfig& m, const json& j) const {
    if (!j.is_object()) fail(ErrorKind::invalid_config, "model must be an object");
    for (auto& [key, value] : j.items()) {
      if (key == "layers") m.layers = value.get<int>();
      else if (key == "width") m.width = value.get<int>();
      else if (key == "grid_dim") m.grid_dim = value.get<int>();
      else if (key == "grid_spacing") m.grid_spacing = value.get<double>();
      else if (key == "grid_sigma") m.grid_sigma = value.get<double>();
      else if (key == "grid_mode") m.grid_mode = field::grid_mode_from_string(value.get<std::string>());
      else fail(ErrorKind::invalid_config, "unknown model key '" + key + "'");
    }
  }
};

void progress_line(int epoch, double loss, int epochs) {
  const int every = std::max(1, epochs / 20);
  if (epoch % every == 0 || epoch + 1 == epochs) {
    std::fprintf(stderr, "epoch %d/%d loss %.6f\n", epoch + 1, epochs, loss);
  }
}

// ---- gen-data ------------------------------------------------------------

struct GenData {
  std::string scene;
  std::string out;
  roomsim::DatasetConfig cfg;
  int workers = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen-data", "simulate a binaural impulse-response dataset");
    cmd->add_option("--scene", scene, "scene JSON file or bundled scene name")->required();
    cmd->add_option("--out", out, "output dataset directory")->required();
    cmd->add_option("--spacing", cfg.probe_spacing, "probe spacing in meters");
    cmd->add_option("--order", cfg.max_order, "maximum image-source order");
    cmd->add_option("--sr", cfg.sample_rate, "sample rate in Hz");
    cmd->add_option("--dur", cfg.ir_duration, "impulse-response duration in seconds");
    cmd->add_option("--seed", cfg.seed, "subsampling and split seed");
    cmd->add_option("--subsample", cfg.subsample, "fraction of pose candidates kept");
    cmd->add_option("--test-fraction", cfg.test_fraction, "held-out fraction");
    cmd->add_option("--workers", workers, "worker threads");
    cmd->callback([this] { run(); });
  }

  void run() {
    SceneGeometry geometry;
    std::string scene_name = scene;
    if (fs::exists(scene)) {
      geometry = load_scene(scene);
    } else if (fs::path(scene).extension().empty()) {
      geometry = roomsim::bundled_scene(scene);
    } else {
      fail(ErrorKind::io, "scene file not found: " + scene);
    }
    cfg.workers = resolve_workers(workers);
    const Dataset ds = roomsim::build_dataset(geometry, cfg);
    write_dataset(ds.manifest, ds.records, out);

    json run = run_header("gen-data");
    run["config"] = {{"scene", scene_name},
                     {"geometry", scene_to_json(geometry)},
                     {"probe_spacing", cfg.probe_spacing},
                     {"max_order", cfg.max_order},
                     {"sample_rate", cfg.sample_rate},
                     {"ir_duration", cfg.ir_duration},
                     {"subsample", cfg.subsample},
                     {"test_fraction", cfg.test_fraction},
                     {"seed", cfg.seed},
                     {"ear_offset", cfg.ear_offset},
                     {"workers", cfg.workers}};
    run["result"] = {{"n_records", ds.records.size()},
                     {"n_train", ds.manifest.train_indices.size()},
                     {"n_test", ds.manifest.test_indices.size()}};
    write_json(run, fs::path(out) / "run.json");
    std::printf("%zu records (%zu train, %zu test) -> %s\n", ds.records.size(), ds.manifest.train_indices.size(),
                ds.manifest.test_indices.size(), out.c_str());
  }
};

// ---- train ---------------------------------------------------------------

struct Train {
  std::string data;
  std::string out;
  TrainFlags flags;
  CLI::Option* scale_opt = nullptr;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "fit a neural acoustic field to a dataset");
    cmd->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--out", out, "output model file")->required();
    flags.add(cmd);
    scale_opt = cmd->get_option("--scale");
    cmd->callback([this] { run(); });
  }

  void run() {
    const field::TrainConfig cfg = flags.resolve(scale_opt->count() > 0);
    const Dataset ds = read_dataset(data);
    const auto records = ds.train_records();
    const auto result = field::train(records, ds.manifest.scene, ds.manifest.stft, cfg,
                                     [&](int e, double l) { progress_line(e, l, cfg.epochs); });
    const fs::path model_path(out);
    if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
    field::save_model(result.model, model_path);

    json run = run_header("train");
    run["config"] = train_config_json(cfg);
    run["config"]["data"] = data;
    run["result"] = {{"n_train", records.size()},
                     {"steps", result.steps},
                     {"first_epoch_loss", result.epoch_loss.front()},
                     {"final_loss", result.epoch_loss.back()},
                     {"epoch_loss", result.epoch_loss},
                     {"model_bytes", fs::file_size(model_path)}};
    write_json(run, model_path.parent_path() / "run.json");
    std::printf("final loss %.6f after %zu steps -> %s\n", result.epoch_loss.back(), result.steps, out.c_str());
  }
};

// ---- eval ----------------------------------------------------------------

struct Eval {
  std::string data;
  std::string model;
  std::string methods = "naf,nearest,linear,codec";
  std::string out;
  std::string split = "test";
  int codec_bits = 8;
  int linear_k = 4;
  std::uint64_t seed = 0;
  int workers = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "score NAF and baselines on a dataset split");
    cmd->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--model", model, "model file (needed for naf)")->check(CLI::ExistingFile);
    cmd->add_option("--methods", methods, "comma-separated methods");
    cmd->add_option("--out", out, "report JSON")->required();
    cmd->add_option("--split", split, "split to score")->check(CLI::IsMember({"test", "train"}));
    cmd->add_option("--codec-bits", codec_bits, "codec bit depth")->check(CLI::IsMember({4, 8, 16}));
    cmd->add_option("--linear-k", linear_k, "neighbors for linear interpolation");
    cmd->add_option("--seed", seed, "random-phase seed base");
    cmd->add_option("--workers", workers, "worker threads");
    cmd->callback([this] { run(); });
  }

  void run() {
    const Dataset ds = read_dataset(data);
    analysis::EvalOptions opt;
    opt.methods = analysis::parse_methods(methods);
    opt.test_split = split == "test";
    opt.codec_bits = codec_bits;
    opt.linear_k = linear_k;
    opt.seed = seed;
    opt.workers = resolve_workers(workers);
    opt.dataset_bytes = container_bytes(data);
    std::optional<field::FieldModel<float>> m;
    if (!model.empty()) {
      m = field::load_model(model);
      opt.model = &*m;
      opt.model_bytes = fs::file_size(model);
    }
    const auto report = analysis::evaluate(ds, opt);
    write_json(report.to_json(), out);

    json run = run_header("eval");
    run["config"] = {{"data", data},       {"model", model},       {"methods", methods},
                     {"split", split},     {"codec_bits", codec_bits}, {"linear_k", linear_k},
                     {"seed", seed},       {"workers", opt.workers}};
    write_json(run, run_path_for(out));
    std::fputs(report.to_table().c_str(), stdout);
  }
};

// ---- render-map ----------------------------------------------------------

struct RenderMap {
  std::string model;
  std::string emitter;
  double res = 0.25;
  std::string out;
  std::string pgm;
  std::uint64_t seed = 0;
  int workers = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("render-map", "render a loudness map for one emitter");
    cmd->add_option("--model", model, "model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--emitter", emitter, "emitter position X,Y in meters")->required();
    cmd->add_option("--res", res, "cell size in meters");
    cmd->add_option("--out", out, "CSV output")->required();
    cmd->add_option("--pgm", pgm, "optional PGM image output");
    cmd->add_option("--seed", seed, "random-phase seed base");
    cmd->add_option("--workers", workers, "worker threads");
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto xy = parse_numbers(emitter, "--emitter", 2);
    if (!(res > 0.0)) fail(ErrorKind::usage, "--res must be positive");
    const auto m = field::load_model(model);
    const Vec2 e{xy[0], xy[1]};
    if (!(e.x > 0.0 && e.x < m.frame.width && e.y > 0.0 && e.y < m.frame.depth)) {
      fail(ErrorKind::invalid_input, "emitter lies outside the " + std::to_string(m.frame.width) + " x " +
                                         std::to_string(m.frame.depth) + " m room");
    }
    const field::FieldEvaluator eval(m);
    const int w = resolve_workers(workers);
    const auto map = field::render_loudness_map(eval, e, res, seed, w);
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    field::write_map_csv(map, out);
    if (!pgm.empty()) field::write_map_pgm(map, pgm);

    json run = run_header("render-map");
    run["config"] = {{"model", model}, {"emitter", xy}, {"res", res}, {"pgm", pgm}, {"seed", seed}, {"workers", w}};
    run["result"] = {{"rows", map.rows}, {"cols", map.cols}};
    write_json(run, run_path_for(out));
  }
};

// ---- auralize ------------------------------------------------------------

struct Auralize {
  std::string model;
  std::string pose;
  std::string in;
  std::string out;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("auralize", "convolve a dry recording with a rendered binaural IR");
    cmd->add_option("--model", model, "model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--pose", pose, "EX,EY,LX,LY,ORIENT (orientation index 0-3 or degrees)")->required();
    cmd->add_option("--in", in, "dry 16-bit WAV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "wet stereo WAV")->required();
    cmd->add_option("--seed", seed, "random-phase seed");
    cmd->callback([this] { run(); });
  }

  static int orientation_index(double v) {
    for (int k = 0; k < kNumOrientations; ++k) {
      if (v == k || v == 90.0 * k) return k;
    }
    fail(ErrorKind::usage, "--pose orientation must be 0-3 or one of 0, 90, 180, 270 degrees");
  }

  void run() {
    const auto p = parse_numbers(pose, "--pose", 5);
    const Pose q{{p[0], p[1]}, {p[2], p[3]}, orientation_index(p[4])};
    const auto m = field::load_model(model);
    const dsp::Audio dry = dsp::read_wav(in);
    if (dry.sample_rate != static_cast<int>(m.frame.sample_rate)) {
      fail(ErrorKind::invalid_input, "input is " + std::to_string(dry.sample_rate) + " Hz but the model renders at " +
                                         std::to_string(static_cast<int>(m.frame.sample_rate)) + " Hz");
    }
    const field::FieldEvaluator eval(m);
    const auto ir = field::render_ir(eval, q, seed);
    dsp::Audio wet;
    wet.sample_rate = dry.sample_rate;
    for (int ear = 0; ear < 2; ++ear) {
      const auto& src = dry.channels[std::min<std::size_t>(ear, dry.channels.size() - 1)];
      wet.channels.push_back(dsp::convolve(src, ir[ear]));
    }
    const auto rep = dsp::write_wav(out, wet);
    if (rep.clipped_samples > 0) {
      std::fprintf(stderr, "warning: %zu samples clipped (peak %.3f)\n", rep.clipped_samples, rep.peak);
    }

    json run = run_header("auralize");
    run["config"] = {{"model", model}, {"pose", p}, {"in", in}, {"seed", seed}};
    run["result"] = {{"frames", wet.frames()}, {"clipped_samples", rep.clipped_samples}, {"peak", rep.peak}};
    write_json(run, run_path_for(out));
  }
};

// ---- probe ---------------------------------------------------------------

struct Probe {
  std::string model;
  std::string data;
  std::string out;
  std::string latents;
  std::string predictions;
  analysis::ProbeConfig cfg;
  int workers = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("probe", "linear probe of wall distance from NAF latents vs MFCC");
    cmd->add_option("--model", model, "model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--out", out, "probe report JSON")->required();
    cmd->add_option("--latents", latents, "CSV of the 2D PCA embedding of test latents");
    cmd->add_option("--predictions", predictions, "CSV of NAF probe predictions at test points");
    cmd->add_option("--spacing", cfg.spacing, "test lattice spacing in meters");
    cmd->add_option("--train-ratio", cfg.train_ratio, "training points per test point");
    cmd->add_option("--lambda", cfg.lambda, "ridge penalty");
    cmd->add_option("--listeners", cfg.n_listeners, "listener positions per feature");
    cmd->add_option("--seed", cfg.seed, "point sampling seed");
    cmd->add_option("--workers", workers, "worker threads");
    cmd->callback([this] { run(); });
  }

  void run() {
    cfg.workers = resolve_workers(workers);
    const Dataset ds = read_dataset(data);
    const auto m = field::load_model(model);
    const field::FieldEvaluator eval(m);
    const auto r = analysis::run_probe(eval, ds, cfg);
    write_json(r.to_json(), out);
    if (!predictions.empty()) analysis::write_probe_csv(r, r.naf, predictions);
    if (!latents.empty()) {
      const auto pca = analysis::pca_2d(r.test_latents);
      std::vector<int> labels;
      for (const Vec2 p : r.points.test) labels.push_back(analysis::room_label(ds.manifest.scene, p));
      analysis::write_embedding_csv(pca, labels, latents);
    }

    json run = run_header("probe");
    run["config"] = {{"model", model},
                     {"data", data},
                     {"spacing", cfg.spacing},
                     {"train_ratio", cfg.train_ratio},
                     {"lambda", cfg.lambda},
                     {"listeners", cfg.n_listeners},
                     {"seed", cfg.seed},
                     {"latent", "last hidden layer, post-activation, mean over ears and (t, f)"},
                     {"mfcc", {{"n_coeff", cfg.mfcc.n_coeff},
                               {"n_mels", cfg.mfcc.n_mels},
                               {"fft_size", cfg.mfcc.stft.fft_size},
                               {"hop", cfg.mfcc.stft.hop}}},
                     {"workers", cfg.workers}};
    write_json(run, run_path_for(out));
    std::printf("explained variance: naf %.4f  mfcc %.4f\n", r.naf.explained_variance, r.mfcc.explained_variance);
  }
};

// ---- report-storage ------------------------------------------------------

struct ReportStorage {
  std::string data;
  std::string model;
  std::string out;
  std::string codec_bits = "8";

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("report-storage", "compare on-disk sizes of NAF and baselines");
    cmd->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--model", model, "model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "storage report JSON")->required();
    cmd->add_option("--codec-bits", codec_bits, "codec bit depths to encode, comma-separated (empty for none)");
    cmd->callback([this] { run(); });
  }

  void run() {
    std::vector<int> depths;
    for (double b : parse_numbers(codec_bits, "--codec-bits")) depths.push_back(static_cast<int>(b));
    const fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    std::vector<fs::path> blobs;
    if (!depths.empty()) {
      const Dataset ds = read_dataset(data);
      const auto train = ds.train_records();
      for (int bits : depths) {
        const fs::path blob =
            out_path.parent_path() / (out_path.stem().string() + ".codec" + std::to_string(bits) + ".mulq");
        write_bytes(baselines::encode_records(train, bits), blob);
        blobs.push_back(blob);
      }
    }
    const auto report = baselines::storage_report(data, model, blobs);
    write_json(report.to_json(), out);

    json run = run_header("report-storage");
    run["config"] = {{"data", data}, {"model", model}, {"codec_bits", depths}};
    write_json(run, run_path_for(out));
    std::fputs(report.to_table().c_str(), stdout);
  }
};

// ---- ablate --------------------------------------------------------------

struct Ablate {
  std::string data;
  std::string fractions = "0.1,0.25,0.5,1.0";
  std::string modes = "shared,none";
  std::string out;
  TrainFlags flags;
  CLI::Option* scale_opt = nullptr;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("ablate", "test loss vs training fraction with and without the grid");
    cmd->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--fractions", fractions, "training fractions, comma-separated");
    cmd->add_option("--modes", modes, "grid modes, comma-separated");
    cmd->add_option("--out", out, "ablation JSON")->required();
    flags.add(cmd);
    cmd->get_option("--grid-mode")->description("unused; see --modes");
    scale_opt = cmd->get_option("--scale");
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto fr = parse_numbers(fractions, "--fractions");
    std::vector<field::GridMode> gm;
    for (const auto& name : split_names(modes)) gm.push_back(field::grid_mode_from_string(name));
    if (fr.empty() || gm.empty()) fail(ErrorKind::usage, "--fractions and --modes must be non-empty");
    const field::TrainConfig base = flags.resolve(scale_opt->count() > 0);
    const Dataset ds = read_dataset(data);
    const auto table = analysis::ablation_curve(ds, fr, gm, base);
    write_json(table.to_json(), out);

    json run = run_header("ablate");
    run["config"] = train_config_json(base);
    run["config"]["data"] = data;
    run["config"]["fractions"] = fr;
    run["config"]["modes"] = modes;
    write_json(run, run_path_for(out));
    for (const auto& c : table.cells) {
      std::printf("fraction %.3f  %-6s  n=%zu  test loss %.5f\n", c.fraction, field::to_string(c.mode).c_str(),
                  c.n_train, c.test_loss);
    }
  }
};

}  // namespace
}  // namespace naf::cli

int main(int argc, char** argv) {
  using namespace naf::cli;
  naf::tune_allocator();
  CLI::App app{"Neural acoustic fields: simulate, train, evaluate and probe"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NAF_GIT_DESCRIBE);

  GenData gen_data;
  Train train;
  Eval eval;
  RenderMap render_map;
  Auralize auralize;
  Probe probe;
  ReportStorage report_storage;
  Ablate ablate;
  gen_data.add(app);
  train.add(app);
  eval.add(app);
  render_map.add(app);
  auralize.add(app);
  probe.add(app);
  report_storage.add(app);
  ablate.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  } catch (const naf::Error& e) {
    std::cerr << "error: " << naf::to_string(e.kind()) << ": " << e.what() << '\n';
    return e.kind() == naf::ErrorKind::usage ? 2 : 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
