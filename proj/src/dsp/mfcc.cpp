#include "naf/dsp/mfcc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "naf/core/error.hpp"
#include "naf/dsp/stft.hpp"

namespace naf::dsp {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Array2D<double> mel_filterbank(int n_mels, int fft_size, double sample_rate) {
  const int n_bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  Array2D<double> fb(static_cast<std::size_t>(n_mels), static_cast<std::size_t>(n_bins));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < n_bins; ++k) {
      const double hz = k * sample_rate / fft_size;
      double w = 0.0;
      if (hz > lo && hz <= mid) w = (hz - lo) / (mid - lo);
      else if (hz > mid && hz < hi) w = (hi - hz) / (hi - mid);
      fb(static_cast<std::size_t>(m), static_cast<std::size_t>(k)) = w;
    }
  }
  return fb;
}

Array2D<double> mfcc(std::span<const double> ir, double sample_rate, const MfccConfig& cfg) {
  if (ir.empty()) fail(ErrorKind::invalid_input, "mfcc: empty input");
  if (cfg.n_coeff <= 0 || cfg.n_coeff > cfg.n_mels) fail(ErrorKind::invalid_config, "mfcc: need 0 < n_coeff <= n_mels");
  const auto spectrum = stft(ir, cfg.stft);
  const auto fb = mel_filterbank(cfg.n_mels, cfg.stft.fft_size, sample_rate);
  const std::size_t frames = spectrum.cols;
  const auto n_mels = static_cast<std::size_t>(cfg.n_mels);
  const auto n_coeff = static_cast<std::size_t>(cfg.n_coeff);

  Array2D<double> out(n_coeff, frames);
  std::vector<double> log_mel(n_mels);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t m = 0; m < n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < spectrum.rows; ++k) e += fb(m, k) * std::norm(spectrum(k, t));
      log_mel[m] = std::log(std::max(e, cfg.log_floor));
    }
    // Orthonormal DCT-II.
    for (std::size_t c = 0; c < n_coeff; ++c) {
      double acc = 0.0;
      for (std::size_t m = 0; m < n_mels; ++m) {
        acc += log_mel[m] * std::cos(std::numbers::pi * static_cast<double>(c) * (m + 0.5) / n_mels);
      }
      const double scale = c == 0 ? std::sqrt(1.0 / n_mels) : std::sqrt(2.0 / n_mels);
      out(c, t) = scale * acc;
    }
  }
  return out;
}

}  // namespace naf::dsp
