#include "naf/dsp/signal.hpp"

#include <cmath>
#include <numeric>

#include "naf/core/error.hpp"
#include "naf/dsp/fft.hpp"

namespace naf::dsp {

namespace {

// Below this many multiply-adds the direct sum is cheaper than three FFTs.
constexpr std::size_t kDirectLimit = 1u << 14;

std::vector<double> convolve_direct(std::span<const double> s, std::span<const double> h) {
  std::vector<double> out(s.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) out[i + j] += s[i] * h[j];
  }
  return out;
}

}  // namespace

std::vector<double> convolve(std::span<const double> signal, std::span<const double> ir) {
  if (signal.empty() || ir.empty()) fail(ErrorKind::invalid_input, "convolve: empty input");
  if (signal.size() * ir.size() <= kDirectLimit) return convolve_direct(signal, ir);

  const std::size_t out_len = signal.size() + ir.size() - 1;
  const std::size_t n = next_pow2(out_len);
  std::vector<double> a(n, 0.0), b(n, 0.0);
  std::copy(signal.begin(), signal.end(), a.begin());
  std::copy(ir.begin(), ir.end(), b.begin());
  std::vector<Complex> fa(n / 2 + 1), fb(n / 2 + 1);
  rfft(a, fa);
  rfft(b, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  irfft(fa, a);
  a.resize(out_len);
  return a;
}

std::optional<double> estimate_t60(std::span<const double> ir, double sample_rate) {
  const std::size_t n = ir.size();
  if (n == 0) return std::nullopt;
  // Schroeder backward integration.
  std::vector<double> edc(n);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += ir[i] * ir[i];
    edc[i] = acc;
  }
  const double total = edc[0];
  if (!(total > 0.0) || !std::isfinite(total)) return std::nullopt;

  constexpr double kUpper = -5.0;
  constexpr double kLower = -35.0;
  std::size_t begin = n;
  std::size_t end = n;
  for (std::size_t i = 0; i < n; ++i) {
    const double db = edc[i] > 0.0 ? 10.0 * std::log10(edc[i] / total) : -INFINITY;
    if (begin == n && db <= kUpper) begin = i;
    if (db < kLower) {
      end = i;
      break;
    }
  }
  if (begin == n || end == n || end <= begin + 1) return std::nullopt;

  // Least-squares line through (time, dB) over [begin, end).
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  const double count = static_cast<double>(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double y = 10.0 * std::log10(edc[i] / total);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double denom = count * stt - st * st;
  if (!(denom > 0.0)) return std::nullopt;
  const double slope = (count * sty - st * sy) / denom;
  if (!(slope < 0.0)) return std::nullopt;
  return -60.0 / slope;
}

double spectral_loss(const Spectrogram& pred, const Spectrogram& gt) {
  if (!pred.values.same_shape(gt.values)) fail(ErrorKind::invalid_input, "spectral_loss: shape mismatch");
  if (pred.values.size() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double d = static_cast<double>(pred.values.data[i]) - static_cast<double>(gt.values.data[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(pred.values.size());
}

double loudness_db(std::span<const double> ir) {
  if (ir.empty()) fail(ErrorKind::invalid_input, "loudness_db: empty input");
  const double energy = std::transform_reduce(ir.begin(), ir.end(), 0.0, std::plus<>(),
                                              [](double v) { return v * v; });
  return 10.0 * std::log10(energy / static_cast<double>(ir.size()) + 1e-12);
}

}  // namespace naf::dsp
