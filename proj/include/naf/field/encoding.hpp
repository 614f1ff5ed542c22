#pragma once

#include <span>
#include <vector>

namespace naf::field {

inline constexpr int kEncodingFrequencies = 10;
inline constexpr double kPositionMaxExp = 7.0;   // highest angular multiple 2^7
inline constexpr double kTimeFreqMaxExp = 10.0;  // highest angular multiple 2^10

/// Writes [sin(pi w_j x) for j] followed by [cos(pi w_j x) for j] into out
/// (2 * n_freq values), with w_j = 2^(j * max_exp / (n_freq - 1)).
void sinusoidal_encode(double x, int n_freq, double max_exp, std::span<double> out);

std::vector<double> sinusoidal_encode(double x, int n_freq, double max_exp);

}  // namespace naf::field
