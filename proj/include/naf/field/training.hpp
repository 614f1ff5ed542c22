#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "naf/core/types.hpp"
#include "naf/field/model.hpp"

namespace naf::field {

struct TrainConfig {
  int epochs = 200;
  int irs_per_batch = 20;
  int coords_per_ir = 2000;
  double lr = 5e-4;
  double lr_decay = 0.99;  // multiplied into the learning rate once per epoch
  double coord_noise_std = 0.1;
  double pad_prob = 0.1;
  std::uint64_t seed = 0;
  ModelConfig model = ModelConfig::desk();
  int workers = 1;
  /// IRs per gradient chunk. Chunks are the unit of parallel work and their
  /// gradients are summed in a fixed order, so the result does not depend on
  /// the worker count.
  int chunk_irs = 5;

  void validate() const;
};

struct TrainResult {
  FieldModel<float> model;
  std::vector<double> epoch_loss;  // mean batch loss per epoch, normalized units
  std::size_t steps = 0;
};

/// Called after every epoch with (epoch index, mean loss).
using ProgressFn = std::function<void(int, double)>;

/// Per-bin mean and standard deviation (floored at kStdFloor) over a set of
/// equally shaped spectrograms.
NormStats compute_norm_stats(const std::vector<Spectrogram>& spectra);

inline float normalize_value(float v, float mean, float std) { return (v - mean) / (3.0f * std); }
inline float denormalize_value(float v, float mean, float std) { return 3.0f * std * v + mean; }

/// Number of frames of a channel that can hold signal: frames up to and
/// including the last one whose window reaches the final nonzero sample.
std::size_t occupied_frames(std::span<const float> channel, const StftConfig& stft);

/// Log spectrograms of both ears of a record.
std::array<Spectrogram, 2> record_spectrograms(const ImpulseResponseRecord& record, const StftConfig& stft);

/// Fits a field to `records` following the batch protocol: each step draws
/// irs_per_batch records and coords_per_ir (ear, t, f) samples per record,
/// adds coordinate noise and fits normalized log-magnitudes with Adam.
/// Throws invalid_config when there are fewer records than irs_per_batch.
TrainResult train(const std::vector<ImpulseResponseRecord>& records, const SceneGeometry& scene,
                  const StftConfig& stft, const TrainConfig& config, const ProgressFn& progress = {});

}  // namespace naf::field
