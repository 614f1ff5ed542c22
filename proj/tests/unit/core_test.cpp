#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "naf/core/dataset.hpp"
#include "naf/core/error.hpp"
#include "naf/core/parallel.hpp"
#include "naf/core/rng.hpp"
#include "naf/core/types.hpp"

namespace fs = std::filesystem;
using namespace naf;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("naf_core_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SceneGeometry small_scene() {
  SceneGeometry s;
  s.width = 5.0;
  s.depth = 4.0;
  s.height = 3.0;
  s.absorption = {0.2, 0.2, 0.3, 0.3, 0.4, 0.1};
  s.occluders = {{{2.5, 0.0}, {2.5, 1.5}}};
  return s;
}

struct Fixture {
  DatasetManifest manifest;
  std::vector<ImpulseResponseRecord> records;
};

Fixture three_records() {
  Fixture f;
  f.manifest.scene = small_scene();
  f.manifest.n_samples = 37;
  f.manifest.n_records = 3;
  f.manifest.split_seed = 4;
  f.manifest.train_indices = {0, 2};
  f.manifest.test_indices = {1};
  Rng rng(11);
  for (int i = 0; i < 3; ++i) {
    ImpulseResponseRecord r;
    r.pose = {{0.5 + i, 1.0}, {4.0, 0.5 + i}, i};
    r.sample_rate = 16000.0;
    for (auto& ch : r.channels) {
      ch.resize(37);
      for (auto& v : ch) v = static_cast<float>(rng.normal());
    }
    r.channels[0][3] = std::numeric_limits<float>::denorm_min();
    f.records.push_back(r);
  }
  return f;
}

void truncate_file(const fs::path& p, std::uintmax_t bytes) { fs::resize_file(p, bytes); }

}  // namespace

TEST_CASE("split of 10 records holds out exactly one") {
  const auto s = split_dataset(10, 0.1, 3);
  CHECK(s.test.size() == 1);
  CHECK(s.train.size() == 9);
}

TEST_CASE("split is deterministic, disjoint and exhaustive") {
  const auto a = split_dataset(100, 0.1, 7);
  const auto b = split_dataset(100, 0.1, 7);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  for (auto i : a.test) CHECK(all.insert(i).second);
  CHECK(all.size() == 100);
  CHECK(*all.rbegin() == 99);
  CHECK(std::is_sorted(a.test.begin(), a.test.end()));
}

TEST_CASE("split golden values for two seeds") {
  const std::vector<std::size_t> seed1 = {8, 16, 17, 22, 23, 38, 39, 54, 90, 94};
  const std::vector<std::size_t> seed2 = {2, 8, 13, 16, 18, 35, 61, 74, 80, 94};
  CHECK(split_dataset(100, 0.1, 1).test == seed1);
  CHECK(split_dataset(100, 0.1, 2).test == seed2);
}

TEST_CASE("split rejects tiny datasets and bad fractions") {
  CHECK_THROWS_AS(split_dataset(1, 0.1, 0), Error);
  try {
    split_dataset(1, 0.1, 0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_dataset);
  }
  CHECK_THROWS_AS(split_dataset(10, 0.0, 0), Error);
  CHECK_THROWS_AS(split_dataset(10, 1.0, 0), Error);
}

TEST_CASE("container round trip is bit exact") {
  const auto f = three_records();
  const auto dir = scratch_dir("roundtrip");
  write_dataset(f.manifest, f.records, dir);
  const Dataset d = read_dataset(dir);
  CHECK(d.manifest.scene == f.manifest.scene);
  CHECK(d.manifest.n_samples == 37);
  CHECK(d.manifest.train_indices == f.manifest.train_indices);
  CHECK(d.manifest.test_indices == f.manifest.test_indices);
  CHECK(d.manifest.stft == f.manifest.stft);
  REQUIRE(d.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(d.records[i].pose == f.records[i].pose);
    for (int c = 0; c < 2; ++c) {
      CHECK(std::memcmp(d.records[i].channels[c].data(), f.records[i].channels[c].data(), 37 * sizeof(float)) == 0);
    }
  }
  CHECK(fs::file_size(dir / kIrsFile) == 4u * 3u * 2u * 37u);
  CHECK(fs::file_size(dir / kPosesFile) == 4u * 3u * 5u);
}

TEST_CASE("manifest carries the documented keys") {
  const auto f = three_records();
  const auto j = manifest_to_json(f.manifest);
  for (const char* key : {"format_version", "sample_rate", "n_samples", "n_records", "fft_size", "hop", "window",
                          "split_seed", "test_indices", "scene"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  CHECK(j["format_version"] == 1);
  CHECK(j["scene"]["absorption"].size() == 6);
}

TEST_CASE("decode failures are distinct") {
  const auto f = three_records();

  SUBCASE("corrupt manifest") {
    const auto dir = scratch_dir("corrupt");
    write_dataset(f.manifest, f.records, dir);
    std::ofstream(dir / kManifestFile, std::ios::binary) << "\x7f" "ELF garbage";
    try {
      read_dataset(dir);
      FAIL("expected a decode error");
    } catch (const DecodeError& e) {
      CHECK(e.failure() == DecodeFailure::malformed_header);
    }
  }

  SUBCASE("truncated payload") {
    const auto dir = scratch_dir("truncated");
    write_dataset(f.manifest, f.records, dir);
    truncate_file(dir / kIrsFile, 4u * 2u * 37u * 2u + 10u);
    try {
      read_dataset(dir);
      FAIL("expected a decode error");
    } catch (const DecodeError& e) {
      CHECK(e.failure() == DecodeFailure::truncated);
    }
  }

  SUBCASE("two records declared, payload for one") {
    auto g = f;
    g.records.resize(2);
    g.manifest.n_records = 2;
    g.manifest.train_indices = {0};
    g.manifest.test_indices = {1};
    const auto dir = scratch_dir("short");
    write_dataset(g.manifest, g.records, dir);
    truncate_file(dir / kIrsFile, 4u * 2u * 37u);
    try {
      read_dataset(dir);
      FAIL("expected a decode error");
    } catch (const DecodeError& e) {
      CHECK(e.failure() == DecodeFailure::truncated);
    }
  }

  SUBCASE("version mismatch") {
    const auto dir = scratch_dir("version");
    write_dataset(f.manifest, f.records, dir);
    auto j = manifest_to_json(f.manifest);
    j["format_version"] = 99;
    std::ofstream(dir / kManifestFile) << j.dump();
    try {
      read_dataset(dir);
      FAIL("expected a decode error");
    } catch (const DecodeError& e) {
      CHECK(e.failure() == DecodeFailure::version_mismatch);
    }
  }
}

TEST_CASE("writer validates poses and lengths") {
  auto f = three_records();
  SUBCASE("pose outside footprint") {
    f.records[1].pose.listener = {6.0, 1.0};
    CHECK_THROWS_AS(write_dataset(f.manifest, f.records, scratch_dir("outside")), Error);
  }
  SUBCASE("non-finite sample") {
    f.records[0].channels[1][5] = std::nanf("");
    CHECK_THROWS_AS(write_dataset(f.manifest, f.records, scratch_dir("nan")), Error);
  }
  SUBCASE("unequal channels") {
    f.records[2].channels[1].pop_back();
    CHECK_THROWS_AS(write_dataset(f.manifest, f.records, scratch_dir("len")), Error);
  }
}

TEST_CASE("scene validation") {
  auto s = small_scene();
  CHECK_NOTHROW(s.validate());
  s.absorption[2] = 1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = small_scene();
  s.occluders.push_back({{1.0, 1.0}, {1.0, 9.0}});
  CHECK_THROWS_AS(s.validate(), Error);
  s = small_scene();
  s.height = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("scene json round trip") {
  const auto s = small_scene();
  CHECK(scene_from_json(scene_to_json(s)) == s);
}

TEST_CASE("segment geometry") {
  const Segment s{{0, 0}, {2, 0}};
  CHECK(segments_intersect(s, {{1, -1}, {1, 1}}));
  CHECK_FALSE(segments_intersect(s, {{3, -1}, {3, 1}}));
  CHECK(segments_intersect(s, {{2, 0}, {2, 5}}));
  CHECK(point_segment_distance({1, 3}, s) == doctest::Approx(3.0));
  CHECK(point_segment_distance({4, 0}, s) == doctest::Approx(2.0));
}

TEST_CASE("stft frame count") {
  StftConfig c;
  CHECK(c.n_freq() == 257);
  CHECK(c.n_frames(8000) == 63);
  CHECK(c.n_frames(128) == 1);
  CHECK(c.n_frames(129) == 2);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(5);
  double s = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = c.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.03);
  CHECK(std::abs(s2 / n - 1.0) < 0.05);
  Rng d(9);
  for (int i = 0; i < 1000; ++i) CHECK(d.below(7) < 7u);
}

TEST_CASE("parallel_for visits each index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw Error(ErrorKind::io, "boom");
                  }),
                  Error);
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  CHECK(resolve_workers(0) >= 1);
}
