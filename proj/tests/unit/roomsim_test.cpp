#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "naf/core/error.hpp"
#include "naf/core/rng.hpp"
#include "naf/roomsim/roomsim.hpp"

namespace fs = std::filesystem;
using namespace naf;
using namespace naf::roomsim;
using doctest::Approx;

namespace {

SceneGeometry room(double w, double d, double h, double absorption) {
  SceneGeometry s;
  s.width = w;
  s.depth = d;
  s.height = h;
  s.absorption.fill(absorption);
  return s;
}

double energy(const ImpulseResponseRecord& r) {
  double e = 0.0;
  for (const auto& ch : r.channels) {
    for (float v : ch) e += static_cast<double>(v) * v;
  }
  return e;
}

std::size_t first_nonzero(const std::vector<float>& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0f) return i;
  }
  return x.size();
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("image source counts follow the L1 lattice") {
  const auto s = room(5, 4, 3, 0.3);
  const Vec3 e{1.0, 1.2, 1.5};
  for (int k = 0; k <= 5; ++k) {
    std::size_t expected = 0;
    for (int x = -k; x <= k; ++x)
      for (int y = -k; y <= k; ++y)
        for (int z = -k; z <= k; ++z) expected += std::abs(x) + std::abs(y) + std::abs(z) <= k;
    const auto images = enumerate_image_sources(s, e, k);
    CHECK(images.size() == expected);
    for (const auto& im : images) {
      CHECK(im.reflection_count == std::abs(im.lattice[0]) + std::abs(im.lattice[1]) + std::abs(im.lattice[2]));
    }
  }
  CHECK(enumerate_image_sources(s, e, 1).size() == 7);
}

TEST_CASE("order zero is the emitter itself") {
  const auto images = enumerate_image_sources(room(5, 4, 3, 0.3), {1.0, 1.2, 1.5}, 0);
  REQUIRE(images.size() == 1);
  CHECK(images[0].position.x == 1.0);
  CHECK(images[0].position.y == 1.2);
  CHECK(images[0].position.z == 1.5);
  CHECK(images[0].amplitude == 1.0);
}

TEST_CASE("image gains") {
  SUBCASE("lossless walls") {
    for (const auto& im : enumerate_image_sources(room(5, 4, 3, 0.0), {2, 2, 1}, 4)) CHECK(im.amplitude == 1.0);
  }
  SUBCASE("first order picks up one wall coefficient") {
    auto s = room(5, 4, 3, 0.0);
    s.absorption = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    const auto images = enumerate_image_sources(s, {1, 1, 1}, 1);
    std::vector<double> gains;
    for (const auto& im : images) {
      if (im.reflection_count == 1) gains.push_back(im.amplitude);
    }
    std::vector<double> expected;
    for (double a : s.absorption) expected.push_back(std::sqrt(1.0 - a));
    std::sort(gains.begin(), gains.end());
    std::sort(expected.begin(), expected.end());
    REQUIRE(gains.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(gains[i] == Approx(expected[i]));
  }
  SUBCASE("emitter on the boundary is rejected") {
    CHECK_THROWS_AS(enumerate_image_sources(room(5, 4, 3, 0.2), {0.0, 1.0, 1.0}, 2), Error);
  }
}

TEST_CASE("hand-computed direct path") {
  const auto s = room(5, 4, 3, 0.3);
  SimulationConfig cfg;
  cfg.max_order = 0;
  cfg.ear_offset = 0.0;
  cfg.n_samples = 1000;
  const auto r = simulate_ir(s, {{1, 1}, {4, 3}, 0}, cfg);
  const double d = std::sqrt(13.0);
  const double pos = d / 343.0 * 16000.0;  // 168.2
  CHECK(pos == Approx(168.2).epsilon(1e-3));
  for (const auto& ch : r.channels) {
    CHECK(first_nonzero(ch) == 168);
    // Energy split over the two taps recovers 1/d.
    const double a = std::hypot(static_cast<double>(ch[168]), static_cast<double>(ch[169]));
    CHECK(a == Approx(1.0 / d).epsilon(1e-5));
    CHECK(a == Approx(0.2774).epsilon(1e-3));
    const double frac = pos - 168.0;
    CHECK(static_cast<double>(ch[169]) * ch[169] / (a * a) == Approx(frac).epsilon(1e-4));
    for (std::size_t i = 170; i < ch.size(); ++i) CHECK(ch[i] == 0.0f);
  }
}

TEST_CASE("direct arrival over random poses") {
  const auto s = room(5, 4, 3, 0.3);
  SimulationConfig cfg;
  cfg.max_order = 0;
  cfg.ear_offset = 0.0;
  cfg.n_samples = 600;
  Rng rng(42);
  for (int i = 0; i < 50; ++i) {
    const Vec2 e{rng.uniform(0.1, 4.9), rng.uniform(0.1, 3.9)};
    const Vec2 l{rng.uniform(0.1, 4.9), rng.uniform(0.1, 3.9)};
    const double d = distance(e, l);
    if (d < 0.05) continue;
    const auto r = simulate_ir(s, {e, l, 0}, cfg);
    const double expected = d / 343.0 * 16000.0;
    const auto i0 = first_nonzero(r.channels[0]);
    CHECK(std::abs(static_cast<double>(i0) - expected) <= 1.0);
    const double a = std::hypot(static_cast<double>(r.channels[0][i0]), static_cast<double>(r.channels[0][i0 + 1]));
    CHECK(a == Approx(1.0 / d).epsilon(0.01));
  }
}

TEST_CASE("reciprocity is bit exact without ear offset") {
  auto s = room(5, 4, 3, 0.25);
  s.occluders = {{{2.5, 0.0}, {2.5, 1.5}}};
  SimulationConfig cfg;
  cfg.max_order = 6;
  cfg.ear_offset = 0.0;
  cfg.n_samples = 2000;
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const Vec2 a{rng.uniform(0.2, 4.8), rng.uniform(0.2, 3.8)};
    const Vec2 b{rng.uniform(0.2, 4.8), rng.uniform(0.2, 3.8)};
    const auto ab = simulate_ir(s, {a, b, i % 4}, cfg);
    const auto ba = simulate_ir(s, {b, a, i % 4}, cfg);
    CHECK(ab.channels[0] == ba.channels[0]);
    CHECK(ab.channels[1] == ba.channels[1]);
  }
}

TEST_CASE("energy falls with absorption and distance") {
  SimulationConfig cfg;
  cfg.max_order = 3;
  cfg.n_samples = 3000;
  double previous = 1e300;
  for (double a : {0.1, 0.3, 0.5, 0.8}) {
    const double e = energy(simulate_ir(room(5, 4, 3, a), {{1, 1}, {4, 3}, 0}, cfg));
    CHECK(e < previous);
    previous = e;
  }
  cfg.max_order = 0;
  previous = 1e300;
  for (double x = 1.5; x < 4.9; x += 0.25) {
    const double e = energy(simulate_ir(room(5, 4, 3, 0.3), {{1, 2}, {x, 2}, 1}, cfg));
    CHECK(e <= previous);
    previous = e;
  }
}

TEST_CASE("a full-width occluder silences the direct path") {
  auto s = room(5, 4, 3, 0.3);
  s.occluders = {{{2.5, 0.0}, {2.5, 4.0}}};
  SimulationConfig cfg;
  cfg.max_order = 0;
  cfg.n_samples = 800;
  const auto r = simulate_ir(s, {{1, 2}, {4, 2}, 0}, cfg);
  CHECK(energy(r) == 0.0);
  cfg.max_order = 4;
  CHECK(energy(simulate_ir(s, {{1, 2}, {4, 2}, 0}, cfg)) == 0.0);
  CHECK(energy(simulate_ir(s, {{1, 2}, {2, 3}, 0}, cfg)) > 0.0);
}

TEST_CASE("too short an IR is a config error") {
  SimulationConfig cfg;
  cfg.n_samples = 100;
  try {
    simulate_ir(room(5, 4, 3, 0.3), {{1, 1}, {4, 3}, 0}, cfg);
    FAIL("expected invalid_config");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_config);
  }
}

TEST_CASE("ears straddle the listener perpendicular to the facing direction") {
  for (int o = 0; o < 4; ++o) {
    const Vec2 l{2.0, 1.5};
    const auto ears = ear_positions(l, o, 0.09);
    CHECK(distance(ears[0], ears[1]) == Approx(0.18));
    CHECK((ears[0].x + ears[1].x) / 2 == Approx(l.x));
    CHECK((ears[0].y + ears[1].y) / 2 == Approx(l.y));
    const double fx = std::cos(o * std::acos(0.0)), fy = std::sin(o * std::acos(0.0));
    CHECK(std::abs((ears[0].x - ears[1].x) * fx + (ears[0].y - ears[1].y) * fy) < 1e-12);
    // Left ear lies counter-clockwise of the facing direction.
    CHECK(fx * (ears[0].y - l.y) - fy * (ears[0].x - l.x) > 0.0);
  }
}

TEST_CASE("probe lattice and dataset") {
  const auto s = room(5, 4, 3, 0.3);
  const auto probes = probe_lattice(s, 1.0);
  REQUIRE(probes.size() == 20);
  CHECK(probes.front().x == 0.5);
  CHECK(probes.front().y == 0.5);
  CHECK(probes.back().x == 4.5);
  CHECK(probes.back().y == 3.5);
  CHECK_THROWS_AS(probe_lattice(s, 0.0), Error);
  CHECK_THROWS_AS(probe_lattice(s, 4.5), Error);

  DatasetConfig cfg;
  cfg.probe_spacing = 1.0;
  cfg.max_order = 1;
  cfg.ir_duration = 0.05;
  cfg.subsample = 0.05;
  cfg.seed = 9;
  const auto ds = build_dataset(s, cfg);
  CHECK(ds.records.size() == 76);  // round(0.05 * 20 * 19 * 4)
  CHECK(ds.records.size() <= 20u * 20u * 4u);
  CHECK(ds.manifest.n_samples == 800);
  CHECK(ds.manifest.test_indices.size() == 8);
  for (const auto& r : ds.records) {
    CHECK(s.contains(r.pose.emitter));
    CHECK(s.contains(r.pose.listener));
    CHECK(r.pose.emitter != r.pose.listener);
  }

  const auto a = fs::temp_directory_path() / "naf_roomsim_a";
  const auto b = fs::temp_directory_path() / "naf_roomsim_b";
  fs::remove_all(a);
  fs::remove_all(b);
  write_dataset(ds.manifest, ds.records, a);
  cfg.workers = 3;
  const auto again = build_dataset(s, cfg);
  write_dataset(again.manifest, again.records, b);
  for (const char* f : {kManifestFile, kPosesFile, kIrsFile}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("bundled scenes are valid") {
  const auto scenes = bundled_scenes();
  CHECK(scenes.size() == 6);
  for (const auto& s : scenes) CHECK_NOTHROW(s.scene.validate());
  CHECK(bundled_scene("two_room_a").occluders.size() == 2);
  CHECK_THROWS_AS(bundled_scene("nope"), Error);
}
