#pragma once

#include <filesystem>
#include <vector>

namespace naf::dsp {

/// Deinterleaved PCM audio in [-1, 1].
struct Audio {
  int sample_rate = 0;
  std::vector<std::vector<double>> channels;

  std::size_t frames() const { return channels.empty() ? 0 : channels[0].size(); }
};

/// Reads RIFF/WAVE PCM 16-bit little-endian, mono or stereo.
Audio read_wav(const std::filesystem::path& path);

struct WavWriteReport {
  std::size_t clipped_samples = 0;
  double peak = 0.0;  // max |sample| before saturation
};

/// Writes 16-bit PCM; samples beyond full scale saturate.
WavWriteReport write_wav(const std::filesystem::path& path, const Audio& audio);

}  // namespace naf::dsp
