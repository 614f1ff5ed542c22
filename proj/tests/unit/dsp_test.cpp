#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "naf/core/error.hpp"
#include "naf/core/rng.hpp"
#include "naf/dsp/fft.hpp"
#include "naf/dsp/mfcc.hpp"
#include "naf/dsp/signal.hpp"
#include "naf/dsp/stft.hpp"
#include "naf/dsp/wav.hpp"

using namespace naf;
using namespace naf::dsp;
using doctest::Approx;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

std::vector<double> direct_convolution(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

std::vector<double> decaying_noise(double tau, double seconds, double sr, std::uint64_t seed) {
  auto x = noise(static_cast<std::size_t>(seconds * sr), seed);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] *= std::exp(-static_cast<double>(n) / sr / tau);
  return x;
}

Spectrogram constant_spec(std::size_t f, std::size_t t, float v) {
  Spectrogram s;
  s.values = Array2D<float>(f, t, v);
  return s;
}

}  // namespace

TEST_CASE("stft shape and zero input") {
  StftConfig cfg;
  const std::vector<double> zeros(8000, 0.0);
  const auto z = stft(zeros, cfg);
  CHECK(z.rows == 257);
  CHECK(z.cols == 63);
  CHECK(std::all_of(z.data.begin(), z.data.end(), [](Complex c) { return c == Complex(0.0, 0.0); }));
  CHECK_THROWS_AS(stft(std::vector<double>{}, cfg), Error);
}

TEST_CASE("sinusoid at a bin center peaks in that bin") {
  StftConfig cfg;
  const double sr = 16000.0;
  const double freq = 1000.0;  // 1000 * 512 / 16000 = bin 32
  std::vector<double> x(4000);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::sin(2.0 * std::numbers::pi * freq * n / sr);
  const auto z = stft(x, cfg);
  const std::size_t frame = z.cols / 2;
  std::size_t best = 0;
  for (std::size_t k = 0; k < z.rows; ++k) {
    if (std::abs(z(k, frame)) > std::abs(z(best, frame))) best = k;
  }
  CHECK(best == static_cast<std::size_t>(freq * cfg.fft_size / sr));
}

TEST_CASE("stft is linear") {
  StftConfig cfg;
  const auto x = noise(1500, 1), y = noise(1500, 2);
  std::vector<double> mix(1500);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.5 * x[i] - 0.75 * y[i];
  const auto zx = stft(x, cfg), zy = stft(y, cfg), zm = stft(mix, cfg);
  double err = 0.0;
  for (std::size_t i = 0; i < zm.data.size(); ++i) {
    err = std::max(err, std::abs(zm.data[i] - (2.5 * zx.data[i] - 0.75 * zy.data[i])));
  }
  CHECK(err < 1e-9);
}

TEST_CASE("exact-phase inversion") {
  for (int hop : {128, 256, 64}) {
    StftConfig cfg{512, hop, "hann"};
    const auto x = noise(3001, 7);
    const auto y = istft(stft(x, cfg), cfg, x.size());
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(x[i] - y[i]));
    CHECK(err < 1e-6);
  }
}

TEST_CASE("log magnitude") {
  ComplexSpectrum z(2, 2);
  z(0, 0) = 0.0;
  z(0, 1) = Complex(0.6, 0.8);
  z(1, 0) = 100.0;
  z(1, 1) = 200.0;
  const auto s = log_magnitude(z);
  CHECK(s.values(0, 0) == Approx(std::log(kMagFloor)));
  CHECK(s.values(0, 1) == Approx(std::log(1.0 + kMagFloor)));
  CHECK(s.values(0, 1) == Approx(kMagFloor).epsilon(1e-3));
  CHECK(s.values(1, 1) - s.values(1, 0) == Approx(std::log(2.0)).epsilon(1e-4));

  // Direct evaluation on a random array.
  Rng rng(3);
  ComplexSpectrum r(17, 5);
  for (auto& c : r.data) c = Complex(rng.normal(), rng.normal()) * 50.0;
  const auto lr = log_magnitude(r);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    CHECK(lr.values.data[i] == Approx(std::log(std::abs(r.data[i]) + kMagFloor)).epsilon(1e-6));
  }
}

TEST_CASE("random phase inversion") {
  StftConfig cfg;
  SUBCASE("floor spectrogram is near silent") {
    const auto s = constant_spec(257, 63, static_cast<float>(std::log(kMagFloor)));
    const auto y = random_phase_inverse(s, cfg, 1, 8000);
    REQUIRE(y.size() == 8000);
    double peak = 0.0;
    for (double v : y) peak = std::max(peak, std::abs(v));
    CHECK(peak < 1e-3);
  }
  SUBCASE("deterministic per seed") {
    Rng rng(4);
    Spectrogram s = constant_spec(257, 20, 0.0f);
    for (auto& v : s.values.data) v = static_cast<float>(rng.uniform(-4.0, 1.0));
    CHECK(random_phase_inverse(s, cfg, 9, 2560) == random_phase_inverse(s, cfg, 9, 2560));
    CHECK(random_phase_inverse(s, cfg, 9, 2560) != random_phase_inverse(s, cfg, 10, 2560));
  }
  SUBCASE("energy follows Parseval") {
    Rng rng(5);
    const std::size_t frames = 40;
    Spectrogram s = constant_spec(257, frames, 0.0f);
    for (auto& v : s.values.data) v = static_cast<float>(rng.uniform(-3.0, 1.0));
    // Sum of |X|^2 over the full spectrum equals N * sum(w^2) / hop * sum(x^2)
    // for a stationary signal; sum(w^2) = 3N/8 for Hann.
    const double n = cfg.fft_size;
    double spectral = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t k = 0; k < 257; ++k) {
        const double m = std::max(0.0, std::exp(static_cast<double>(s.values(k, t))) - kMagFloor);
        spectral += (k == 0 || k == 256 ? 1.0 : 2.0) * m * m;
      }
    }
    const double implied = spectral * cfg.hop / (n * 3.0 * n / 8.0);
    const auto y = random_phase_inverse(s, cfg, 2, frames * cfg.hop);
    double energy = 0.0;
    for (double v : y) energy += v * v;
    CHECK(energy == Approx(implied).epsilon(0.2));
  }
}

TEST_CASE("convolution identities") {
  const auto s = noise(50, 11);
  SUBCASE("delta") {
    const auto y = convolve(s, std::vector<double>{1.0});
    REQUIRE(y.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(y[i] == s[i]);
  }
  SUBCASE("shifted delta") {
    std::vector<double> d(8, 0.0);
    d[5] = 1.0;
    const auto y = convolve(s, d);
    REQUIRE(y.size() == s.size() + 7);
    for (std::size_t i = 0; i < 5; ++i) CHECK(y[i] == 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(y[i + 5] == Approx(s[i]).epsilon(1e-12));
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(convolve(s, std::vector<double>{}), Error);
    CHECK_THROWS_AS(convolve(std::vector<double>{}, s), Error);
  }
}

TEST_CASE("convolution matches the direct sum") {
  const std::vector<std::pair<std::size_t, std::size_t>> sizes = {{64, 16}, {1, 1}, {256, 256}, {200, 7}, {3, 256},
                                                                   {255, 129}};
  std::uint64_t seed = 20;
  for (auto [na, nb] : sizes) {
    const auto a = noise(na, seed++), b = noise(nb, seed++);
    const auto ref = direct_convolution(a, b);
    const auto y = convolve(a, b);
    const auto yc = convolve(b, a);
    REQUIRE(y.size() == ref.size());
    double scale = 0.0, err = 0.0, comm = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      scale = std::max(scale, std::abs(ref[i]));
      err = std::max(err, std::abs(y[i] - ref[i]));
      comm = std::max(comm, std::abs(y[i] - yc[i]));
    }
    CHECK(err <= 1e-9 * scale);
    CHECK(comm <= 1e-9 * scale);
  }
}

TEST_CASE("T60 of exponentially decaying noise") {
  const double sr = 16000.0;
  for (double tau : {0.05, 0.1, 0.2}) {
    const auto ir = decaying_noise(tau, 10.0 * tau, sr, 31);
    const auto t60 = estimate_t60(ir, sr);
    REQUIRE(t60.has_value());
    CHECK(*t60 == Approx(6.9078 * tau).epsilon(0.05));
  }
}

TEST_CASE("T60 is scale invariant and fails without decay") {
  const double sr = 16000.0;
  auto ir = decaying_noise(0.1, 1.0, sr, 8);
  const auto a = estimate_t60(ir, sr);
  for (auto& v : ir) v *= 123.0;
  const auto b = estimate_t60(ir, sr);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(*b == Approx(*a).epsilon(1e-9));

  CHECK_FALSE(estimate_t60(std::vector<double>(1000, 0.0), sr).has_value());
  CHECK_FALSE(estimate_t60(noise(1000, 3), sr).has_value());
}

TEST_CASE("spectral loss") {
  Rng rng(12);
  Spectrogram a = constant_spec(9, 4, 0.0f), b = constant_spec(9, 4, 0.0f);
  for (auto& v : a.values.data) v = static_cast<float>(rng.normal());
  for (auto& v : b.values.data) v = static_cast<float>(rng.normal());
  CHECK(spectral_loss(a, a) == 0.0);
  Spectrogram shifted = a;
  for (auto& v : shifted.values.data) v += 1.0f;
  CHECK(spectral_loss(shifted, a) == Approx(1.0).epsilon(1e-6));
  double ref = 0.0;
  for (std::size_t i = 0; i < a.values.data.size(); ++i) {
    const double d = static_cast<double>(a.values.data[i]) - b.values.data[i];
    ref += d * d;
  }
  ref /= static_cast<double>(a.values.data.size());
  CHECK(std::abs(spectral_loss(a, b) - ref) < 1e-12);
  CHECK(spectral_loss(a, b) == spectral_loss(b, a));
  CHECK_THROWS_AS(spectral_loss(a, constant_spec(9, 5, 0.0f)), Error);
}

TEST_CASE("mfcc") {
  const double sr = 16000.0;
  MfccConfig cfg;
  SUBCASE("silence is the DCT of the log floor") {
    const auto m = mfcc(std::vector<double>(8000, 0.0), sr, cfg);
    REQUIRE(m.rows == 13);
    REQUIRE(m.cols == 8);
    for (std::size_t t = 0; t < m.cols; ++t) {
      CHECK(m(0, t) == Approx(std::sqrt(static_cast<double>(cfg.n_mels)) * std::log(cfg.log_floor)));
      for (std::size_t k = 1; k < m.rows; ++k) CHECK(std::abs(m(k, t)) < 1e-9);
    }
  }
  SUBCASE("scaling shifts only coefficient zero") {
    const auto ir = decaying_noise(0.1, 0.5, sr, 2);
    auto louder = ir;
    for (auto& v : louder) v *= 3.0;
    const auto a = mfcc(ir, sr, cfg), b = mfcc(louder, sr, cfg);
    const double shift = std::sqrt(static_cast<double>(cfg.n_mels)) * 2.0 * std::log(3.0);
    for (std::size_t t = 0; t < a.cols; ++t) {
      CHECK(b(0, t) - a(0, t) == Approx(shift).epsilon(1e-6));
      for (std::size_t k = 1; k < a.rows; ++k) CHECK(b(k, t) == Approx(a(k, t)).epsilon(1e-6).scale(1.0));
    }
  }
  SUBCASE("mel scale") {
    CHECK(hz_to_mel(1000.0) == Approx(1000.0).epsilon(1e-3));
    CHECK(mel_to_hz(hz_to_mel(3210.0)) == Approx(3210.0));
    const auto fb = mel_filterbank(24, 2048, sr);
    CHECK(fb.rows == 24);
    CHECK(fb.cols == 1025);
  }
}

TEST_CASE("loudness") {
  CHECK(loudness_db(std::vector<double>(10, 0.0)) == Approx(-120.0));
  CHECK(std::abs(loudness_db(std::vector<double>(10, 1.0))) < 1e-9);
  const auto x = noise(100, 1);
  auto half = x;
  for (auto& v : half) v *= 0.5;
  CHECK(loudness_db(x) - loudness_db(half) == Approx(20.0 * std::log10(2.0)).epsilon(1e-6));
}

TEST_CASE("wav round trip and clipping") {
  const auto path = std::filesystem::temp_directory_path() / "naf_dsp_test.wav";
  Audio a;
  a.sample_rate = 16000;
  a.channels = {{0.0, 0.5, -0.5, 0.25}, {1.5, -2.0, 0.1, 0.0}};
  const auto rep = write_wav(path, a);
  CHECK(rep.clipped_samples == 2);
  CHECK(rep.peak == Approx(2.0));
  const auto b = read_wav(path);
  CHECK(b.sample_rate == 16000);
  REQUIRE(b.channels.size() == 2);
  REQUIRE(b.frames() == 4);
  CHECK(b.channels[0][1] == Approx(0.5).epsilon(1e-4));
  CHECK(b.channels[0][2] == Approx(-0.5).epsilon(1e-4));
  CHECK(b.channels[1][0] == Approx(1.0).epsilon(1e-4));
  CHECK(b.channels[1][1] == Approx(-1.0).epsilon(1e-4));
  CHECK_THROWS_AS(read_wav(std::filesystem::temp_directory_path() / "naf_missing.wav"), Error);
}

TEST_CASE("fft round trip") {
  const auto x = noise(64, 5);
  std::vector<Complex> spec(33);
  rfft(x, spec);
  std::vector<double> y(64);
  irfft(spec, y);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == Approx(x[i]).epsilon(1e-12).scale(1.0));
  CHECK(next_pow2(65) == 128);
  CHECK(next_pow2(64) == 64);
}
