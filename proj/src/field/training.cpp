#include "naf/field/training.hpp"

#include <algorithm>
#include <cmath>

#include "naf/core/error.hpp"
#include "naf/core/parallel.hpp"
#include "naf/diffcalc/adam.hpp"
#include "naf/dsp/stft.hpp"

namespace naf::field {

using diffcalc::Graph;
using diffcalc::Tensor;
using diffcalc::Var;

void TrainConfig::validate() const {
  if (epochs < 1 || irs_per_batch < 1 || coords_per_ir < 1 || chunk_irs < 1) {
    fail(ErrorKind::invalid_config, "training counts must be positive");
  }
  if (!(lr > 0.0) || !(lr_decay > 0.0)) fail(ErrorKind::invalid_config, "learning rate and decay must be positive");
  if (coord_noise_std < 0.0 || pad_prob < 0.0 || pad_prob > 1.0) {
    fail(ErrorKind::invalid_config, "noise must be non-negative and pad probability in [0, 1]");
  }
  model.validate();
}

NormStats compute_norm_stats(const std::vector<Spectrogram>& spectra) {
  if (spectra.empty()) fail(ErrorKind::invalid_input, "norm stats need at least one spectrogram");
  const std::size_t rows = spectra[0].values.rows;
  const std::size_t cols = spectra[0].values.cols;
  std::vector<double> sum(rows * cols, 0.0), sq(rows * cols, 0.0);
  for (const Spectrogram& s : spectra) {
    if (s.values.rows != rows || s.values.cols != cols) {
      fail(ErrorKind::invalid_shape, "norm stats: spectrogram shapes differ");
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += s.values.data[i];
  }
  const double n = static_cast<double>(spectra.size());
  for (double& v : sum) v /= n;
  for (const Spectrogram& s : spectra) {
    for (std::size_t i = 0; i < sq.size(); ++i) {
      const double d = s.values.data[i] - sum[i];
      sq[i] += d * d;
    }
  }
  NormStats out{Array2D<float>(rows, cols), Array2D<float>(rows, cols)};
  for (std::size_t i = 0; i < sum.size(); ++i) {
    out.mean.data[i] = static_cast<float>(sum[i]);
    out.std.data[i] = static_cast<float>(std::max(std::sqrt(sq[i] / n), kStdFloor));
  }
  return out;
}

std::size_t occupied_frames(std::span<const float> channel, const StftConfig& stft) {
  const auto total = static_cast<std::size_t>(stft.n_frames(channel.size()));
  std::size_t last = 0;
  bool any = false;
  for (std::size_t i = channel.size(); i-- > 0;) {
    if (channel[i] != 0.0f) {
      last = i;
      any = true;
      break;
    }
  }
  if (!any) return 1;
  const std::size_t reach = (last + static_cast<std::size_t>(stft.fft_size / 2)) / static_cast<std::size_t>(stft.hop) + 1;
  return std::min(total, reach);
}

std::array<Spectrogram, 2> record_spectrograms(const ImpulseResponseRecord& record, const StftConfig& stft) {
  std::array<Spectrogram, 2> out;
  for (int ear = 0; ear < 2; ++ear) {
    out[static_cast<std::size_t>(ear)] = dsp::log_spectrogram(dsp::to_double(record.channels[static_cast<std::size_t>(ear)]), stft);
  }
  return out;
}

namespace {

struct Sample {
  std::vector<PoseRow> poses;  // two rows per record: left then right ear
  CoordBatch coords;
  std::vector<float> targets;
};

}  // namespace

TrainResult train(const std::vector<ImpulseResponseRecord>& records, const SceneGeometry& scene,
                  const StftConfig& stft, const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  stft.validate();
  if (records.size() < static_cast<std::size_t>(config.irs_per_batch)) {
    fail(ErrorKind::invalid_config, "training needs at least irs_per_batch=" + std::to_string(config.irs_per_batch) +
                                        " records, got " + std::to_string(records.size()));
  }
  const std::size_t n_samples = records[0].n_samples();
  for (const auto& r : records) {
    if (r.n_samples() != n_samples) fail(ErrorKind::invalid_dataset, "training records differ in length");
  }

  FieldFrame frame;
  frame.width = scene.width;
  frame.depth = scene.depth;
  frame.sample_rate = static_cast<int>(std::lround(records[0].sample_rate));
  frame.n_samples = n_samples;
  frame.stft = stft;
  const std::size_t n_freq = frame.n_freq_bins();
  const std::size_t n_time = frame.n_frames();

  // Spectrograms, occupied extents and normalization.
  std::vector<Spectrogram> spectra(records.size() * 2);
  std::vector<std::size_t> extent(records.size());
  parallel_for(records.size(), config.workers, [&](std::size_t r) {
    auto both = record_spectrograms(records[r], stft);
    spectra[2 * r] = std::move(both[0]);
    spectra[2 * r + 1] = std::move(both[1]);
    extent[r] = std::max(occupied_frames(records[r].channels[0], stft), occupied_frames(records[r].channels[1], stft));
  });

  TrainResult result;
  result.model = init_model(config.model, frame, config.seed);
  FieldModel<float>& model = result.model;
  model.norm = compute_norm_stats(spectra);
  std::vector<std::vector<float>> targets(spectra.size());
  for (std::size_t k = 0; k < spectra.size(); ++k) {
    const auto& v = spectra[k].values.data;
    targets[k].resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      targets[k][i] = normalize_value(v[i], model.norm.mean.data[i], model.norm.std.data[i]);
    }
  }
  spectra.clear();

  auto params = model.params.list();
  diffcalc::AdamState adam;
  Rng rng(Rng::mix(config.seed ^ 0x7a11u));
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto per_batch = static_cast<std::size_t>(config.irs_per_batch);
  const auto per_ir = static_cast<std::size_t>(config.coords_per_ir);
  const auto chunk_irs = static_cast<std::size_t>(config.chunk_irs);
  const std::size_t steps_per_epoch = records.size() / per_batch;
  const double sx = scene.width / 2.0;  // meters per scaled unit
  const double sy = scene.depth / 2.0;
  const double noise = config.coord_noise_std;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const double lr = config.lr * std::pow(config.lr_decay, epoch);
    double epoch_loss = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      // Draw every random quantity up front, chunk by chunk.
      const std::size_t n_chunks = (per_batch + chunk_irs - 1) / chunk_irs;
      std::vector<Sample> chunks(n_chunks);
      for (std::size_t b = 0; b < per_batch; ++b) {
        const std::size_t r = order[step * per_batch + b];
        Sample& s = chunks[b / chunk_irs];
        const Pose& pose = records[r].pose;
        const bool pad = rng.uniform() < config.pad_prob;
        const std::size_t t_range = pad ? n_time : extent[r];
        PoseRow row;
        row.emitter = {pose.emitter.x + sx * noise * rng.normal(), pose.emitter.y + sy * noise * rng.normal()};
        row.listener = {pose.listener.x + sx * noise * rng.normal(), pose.listener.y + sy * noise * rng.normal()};
        row.orientation = pose.orientation;
        const std::size_t base = s.poses.size();
        for (int ear = 0; ear < kNumEars; ++ear) {
          row.ear = ear;
          s.poses.push_back(row);
        }
        for (std::size_t c = 0; c < per_ir; ++c) {
          const std::size_t ear = rng.below(2);
          const std::size_t t = rng.below(t_range);
          const std::size_t f = rng.below(n_freq);
          const double ts = frame.scale_t(static_cast<double>(t)) + noise * rng.normal();
          const double fs = frame.scale_f(static_cast<double>(f)) + noise * rng.normal();
          s.coords.push(base + ear, ts, fs);
          s.targets.push_back(targets[2 * r + ear][f * n_time + t]);
        }
      }

      std::vector<std::vector<std::vector<float>>> sinks(n_chunks);
      std::vector<double> losses(n_chunks, 0.0);
      const double total_rows = static_cast<double>(per_batch * per_ir);
      parallel_for(n_chunks, config.workers, [&](std::size_t k) {
        Sample& s = chunks[k];
        Graph<float> g;
        BoundParams<float> bound = bind(g, model.params, true, &sinks[k]);
        ForwardResult<float> fr = forward(g, bound, model, s.poses, s.coords);
        const std::size_t rows = s.targets.size();
        Var<float> target = g.constant({rows, 1}, std::move(s.targets));
        Var<float> loss = diffcalc::mse(fr.output, target);
        const double weight = static_cast<double>(s.coords.size()) / total_rows;
        losses[k] = static_cast<double>(loss.item()) * weight;
        g.backward(diffcalc::scale(loss, static_cast<float>(weight)));
      });

      double step_loss = 0.0;
      for (std::size_t i = 0; i < params.size(); ++i) {
        std::vector<float>& grad = params[i]->grad;
        std::fill(grad.begin(), grad.end(), 0.0f);
        for (std::size_t k = 0; k < n_chunks; ++k) {
          const auto& sk = sinks[k][i];
          if (sk.empty()) continue;
          for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += sk[j];
        }
      }
      for (double l : losses) step_loss += l;
      diffcalc::adam_step(params, adam, lr);
      for (auto& grid : model.params.grids) clamp_bandwidth(grid);
      epoch_loss += step_loss;
      ++result.steps;
    }
    epoch_loss /= static_cast<double>(steps_per_epoch);
    result.epoch_loss.push_back(epoch_loss);
    if (progress) progress(epoch, epoch_loss);
  }
  return result;
}

}  // namespace naf::field
