#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "naf/core/types.hpp"
#include "naf/dsp/fft.hpp"

namespace naf::dsp {

/// Floor added to magnitudes before the natural log.
inline constexpr double kMagFloor = 1e-3;

/// Complex STFT, rows = frequency bins (fft_size/2 + 1), cols = frames.
using ComplexSpectrum = Array2D<Complex>;

/// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

/// Frames are centered on t * hop with zeros outside the signal (no
/// reflection), giving ceil(len / hop) frames.
ComplexSpectrum stft(std::span<const double> signal, const StftConfig& cfg);

/// Least-squares overlap-add inverse; exact for spectra produced by stft().
std::vector<double> istft(const ComplexSpectrum& spectrum, const StftConfig& cfg, std::size_t length);

/// ln(|z| + kMagFloor) per bin.
Spectrogram log_magnitude(const ComplexSpectrum& spectrum);

/// Convenience: log_magnitude(stft(signal)).
Spectrogram log_spectrogram(std::span<const double> signal, const StftConfig& cfg);

/// Magnitudes exp(v) - kMagFloor (clamped at 0) with i.i.d. uniform phases,
/// inverted by overlap-add. Frames from independent phases add
/// incoherently, so the output is scaled by sqrt(fft_size / hop) to keep the
/// energy implied by the magnitudes.
std::vector<double> random_phase_inverse(const Spectrogram& spec, const StftConfig& cfg, std::uint64_t seed,
                                         std::size_t length);

std::vector<double> to_double(std::span<const float> x);
std::vector<float> to_float(std::span<const double> x);

}  // namespace naf::dsp
