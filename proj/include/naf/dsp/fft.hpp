#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace naf::dsp {

using Complex = std::complex<double>;

/// Real-to-complex DFT of in.size() samples into in.size()/2 + 1 bins.
void rfft(std::span<const double> in, std::span<Complex> out);

/// Inverse of rfft including the 1/n factor; out.size() is the transform length.
void irfft(std::span<const Complex> in, std::span<double> out);

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

}  // namespace naf::dsp
