#include "naf/field/encoding.hpp"

#include <cmath>
#include <numbers>

#include "naf/core/error.hpp"

namespace naf::field {

void sinusoidal_encode(double x, int n_freq, double max_exp, std::span<double> out) {
  if (n_freq <= 0 || out.size() != static_cast<std::size_t>(2 * n_freq)) {
    fail(ErrorKind::invalid_shape, "sinusoidal_encode: output must hold 2 * n_freq values");
  }
  for (int j = 0; j < n_freq; ++j) {
    const double exponent = n_freq == 1 ? 0.0 : j * max_exp / (n_freq - 1);
    const double arg = std::numbers::pi * std::exp2(exponent) * x;
    out[static_cast<std::size_t>(j)] = std::sin(arg);
    out[static_cast<std::size_t>(n_freq + j)] = std::cos(arg);
  }
}

std::vector<double> sinusoidal_encode(double x, int n_freq, double max_exp) {
  std::vector<double> out(static_cast<std::size_t>(2 * n_freq));
  sinusoidal_encode(x, n_freq, max_exp, out);
  return out;
}

}  // namespace naf::field
