#pragma once

#include <span>

#include "naf/core/types.hpp"

namespace naf::dsp {

struct MfccConfig {
  int n_coeff = 13;
  int n_mels = 24;
  // 2048/1024 gives 8 frames for a 0.5 s response at 16 kHz.
  StftConfig stft{2048, 1024, "hann"};
  double log_floor = 1e-10;
};

/// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters, n_mels x (fft_size/2 + 1).
Array2D<double> mel_filterbank(int n_mels, int fft_size, double sample_rate);

/// Power STFT -> mel energies -> ln(max(e, floor)) -> orthonormal DCT-II.
/// Returns n_coeff x n_frames.
Array2D<double> mfcc(std::span<const double> ir, double sample_rate, const MfccConfig& cfg = {});

}  // namespace naf::dsp
