#pragma once

#include <optional>
#include <span>
#include <vector>

#include "naf/core/types.hpp"

namespace naf::dsp {

/// Full linear convolution, length len(s) + len(ir) - 1. Short inputs use
/// the direct sum, longer ones an FFT product.
std::vector<double> convolve(std::span<const double> signal, std::span<const double> ir);

/// Reverberation time from the Schroeder energy decay curve, fitted between
/// -5 dB and -35 dB. Empty when the IR has no energy or never decays to -35 dB.
std::optional<double> estimate_t60(std::span<const double> ir, double sample_rate);

/// Mean squared difference over all bins. Throws invalid_input on shape mismatch.
double spectral_loss(const Spectrogram& pred, const Spectrogram& gt);

/// 10 log10(mean(x^2) + 1e-12).
double loudness_db(std::span<const double> ir);

}  // namespace naf::dsp
