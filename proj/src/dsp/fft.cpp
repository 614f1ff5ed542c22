#include "naf/dsp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "naf/core/error.hpp"

namespace naf::dsp {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : forward_) fftw_destroy_plan(p);
    for (auto& [n, p] : inverse_) fftw_destroy_plan(p);
  }

  fftw_plan forward(int n) {
    std::lock_guard lock(mutex_);
    auto it = forward_.find(n);
    if (it != forward_.end()) return it->second;
    std::vector<double> in(static_cast<std::size_t>(n));
    std::vector<Complex> out(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan p = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    forward_.emplace(n, p);
    return p;
  }

  fftw_plan inverse(int n) {
    std::lock_guard lock(mutex_);
    auto it = inverse_.find(n);
    if (it != inverse_.end()) return it->second;
    std::vector<Complex> in(static_cast<std::size_t>(n / 2 + 1));
    std::vector<double> out(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    inverse_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<int, fftw_plan> forward_;
  std::map<int, fftw_plan> inverse_;
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void rfft(std::span<const double> in, std::span<Complex> out) {
  const std::size_t n = in.size();
  if (n == 0 || out.size() != n / 2 + 1) fail(ErrorKind::invalid_shape, "rfft: output must hold n/2+1 bins");
  thread_local std::vector<double> scratch;
  scratch.assign(in.begin(), in.end());
  fftw_execute_dft_r2c(plans().forward(static_cast<int>(n)), scratch.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft(std::span<const Complex> in, std::span<double> out) {
  const std::size_t n = out.size();
  if (n == 0 || in.size() != n / 2 + 1) fail(ErrorKind::invalid_shape, "irfft: input must hold n/2+1 bins");
  thread_local std::vector<Complex> scratch;
  // c2r overwrites its input.
  scratch.assign(in.begin(), in.end());
  fftw_execute_dft_c2r(plans().inverse(static_cast<int>(n)), reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace naf::dsp
