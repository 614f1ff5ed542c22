#include "naf/dsp/stft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "naf/core/error.hpp"
#include "naf/core/rng.hpp"

namespace naf::dsp {

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

ComplexSpectrum stft(std::span<const double> signal, const StftConfig& cfg) {
  if (signal.empty()) fail(ErrorKind::invalid_input, "stft: empty signal");
  cfg.validate();
  const int n_fft = cfg.fft_size;
  const int half = n_fft / 2;
  const int frames = cfg.n_frames(signal.size());
  const auto window = hann_window(n_fft);
  const auto len = static_cast<std::ptrdiff_t>(signal.size());

  ComplexSpectrum out(static_cast<std::size_t>(cfg.n_freq()), static_cast<std::size_t>(frames));
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  std::vector<Complex> bins(static_cast<std::size_t>(cfg.n_freq()));
  for (int t = 0; t < frames; ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * cfg.hop - half;
    for (int m = 0; m < n_fft; ++m) {
      const std::ptrdiff_t idx = start + m;
      const double x = (idx >= 0 && idx < len) ? signal[static_cast<std::size_t>(idx)] : 0.0;
      frame[static_cast<std::size_t>(m)] = x * window[static_cast<std::size_t>(m)];
    }
    rfft(frame, bins);
    for (std::size_t f = 0; f < bins.size(); ++f) out(f, static_cast<std::size_t>(t)) = bins[f];
  }
  return out;
}

std::vector<double> istft(const ComplexSpectrum& spectrum, const StftConfig& cfg, std::size_t length) {
  cfg.validate();
  if (spectrum.rows != static_cast<std::size_t>(cfg.n_freq())) {
    fail(ErrorKind::invalid_shape, "istft: bin count does not match fft_size");
  }
  const int n_fft = cfg.fft_size;
  const int half = n_fft / 2;
  const auto window = hann_window(n_fft);
  const auto len = static_cast<std::ptrdiff_t>(length);

  std::vector<double> acc(length, 0.0);
  std::vector<double> norm(length, 0.0);
  std::vector<Complex> bins(spectrum.rows);
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  for (std::size_t t = 0; t < spectrum.cols; ++t) {
    for (std::size_t f = 0; f < spectrum.rows; ++f) bins[f] = spectrum(f, t);
    irfft(bins, frame);
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * cfg.hop - half;
    for (int m = 0; m < n_fft; ++m) {
      const std::ptrdiff_t idx = start + m;
      if (idx < 0 || idx >= len) continue;
      const double w = window[static_cast<std::size_t>(m)];
      acc[static_cast<std::size_t>(idx)] += w * frame[static_cast<std::size_t>(m)];
      norm[static_cast<std::size_t>(idx)] += w * w;
    }
  }
  for (std::size_t i = 0; i < length; ++i) {
    acc[i] = norm[i] > 1e-12 ? acc[i] / norm[i] : 0.0;
  }
  return acc;
}

Spectrogram log_magnitude(const ComplexSpectrum& spectrum) {
  Spectrogram s;
  s.values = Array2D<float>(spectrum.rows, spectrum.cols);
  for (std::size_t i = 0; i < spectrum.data.size(); ++i) {
    s.values.data[i] = static_cast<float>(std::log(std::abs(spectrum.data[i]) + kMagFloor));
  }
  return s;
}

Spectrogram log_spectrogram(std::span<const double> signal, const StftConfig& cfg) {
  return log_magnitude(stft(signal, cfg));
}

std::vector<double> random_phase_inverse(const Spectrogram& spec, const StftConfig& cfg, std::uint64_t seed,
                                         std::size_t length) {
  Rng rng(seed);
  ComplexSpectrum z(spec.n_freq(), spec.n_time());
  // Frame-major draw order so that the phase of (f, t) is independent of the
  // spectrogram's storage layout.
  for (std::size_t t = 0; t < spec.n_time(); ++t) {
    for (std::size_t f = 0; f < spec.n_freq(); ++f) {
      const double mag = std::max(0.0, std::exp(static_cast<double>(spec.values(f, t))) - kMagFloor);
      const double phase = 2.0 * std::numbers::pi * rng.uniform();
      z(f, t) = std::polar(mag, phase);
    }
  }
  auto out = istft(z, cfg, length);
  const double gain = std::sqrt(static_cast<double>(cfg.fft_size) / cfg.hop);
  for (double& v : out) v *= gain;
  return out;
}

std::vector<double> to_double(std::span<const float> x) { return {x.begin(), x.end()}; }

std::vector<float> to_float(std::span<const double> x) {
  std::vector<float> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return static_cast<float>(v); });
  return out;
}

}  // namespace naf::dsp
