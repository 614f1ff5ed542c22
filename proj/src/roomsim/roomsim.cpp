#include "naf/roomsim/roomsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "naf/core/error.hpp"
#include "naf/core/parallel.hpp"
#include "naf/core/rng.hpp"

namespace naf::roomsim {

namespace {

// Reflections off the low and high wall of one axis for image index n.
std::pair<int, int> wall_hits(int n) {
  const int a = std::abs(n);
  const int near = (a + 1) / 2;
  const int far = a / 2;
  // n > 0 first bounces off the high wall, n < 0 off the low wall.
  return n > 0 ? std::pair{far, near} : std::pair{near, far};
}

double axis_gain(int n, double beta_low, double beta_high) {
  const auto [low, high] = wall_hits(n);
  return std::pow(beta_low, low) * std::pow(beta_high, high);
}

// Image coordinate along one axis of length len for source coordinate s.
double image_coord(int n, double len, double s) {
  return (n % 2 == 0) ? n * len + s : (n + 1) * len - s;
}

// Offset image - receiver, written so that exchanging source and receiver
// yields the exactly negated (even n) or identical (odd n) value.
double image_offset(int n, double len, double s, double r) {
  return (n % 2 == 0) ? n * len + (s - r) : (n + 1) * len - (s + r);
}

std::array<double, 6> betas(const SceneGeometry& scene) {
  std::array<double, 6> b{};
  for (int w = 0; w < 6; ++w) b[static_cast<std::size_t>(w)] = std::sqrt(1.0 - scene.absorption[static_cast<std::size_t>(w)]);
  return b;
}

Vec2 mirror_into_cell(Vec2 p, int i, int j, const SceneGeometry& scene) {
  return {image_coord(i, scene.width, p.x), image_coord(j, scene.depth, p.y)};
}

struct Arrival {
  double distance;
  double gain;
  bool operator<(const Arrival& o) const {
    return distance < o.distance || (distance == o.distance && gain < o.gain);
  }
};

}  // namespace

std::vector<ImageSource> enumerate_image_sources(const SceneGeometry& scene, Vec3 emitter, int max_order) {
  scene.validate();
  if (max_order < 0) fail(ErrorKind::invalid_input, "max_order must be >= 0");
  if (!(emitter.x > 0 && emitter.x < scene.width && emitter.y > 0 && emitter.y < scene.depth && emitter.z > 0 &&
        emitter.z < scene.height)) {
    fail(ErrorKind::invalid_input, "emitter must lie strictly inside the room");
  }
  const auto b = betas(scene);
  std::vector<ImageSource> out;
  for (int nx = -max_order; nx <= max_order; ++nx) {
    const int rx = max_order - std::abs(nx);
    for (int ny = -rx; ny <= rx; ++ny) {
      const int rz = rx - std::abs(ny);
      for (int nz = -rz; nz <= rz; ++nz) {
        ImageSource s;
        s.lattice = {nx, ny, nz};
        s.reflection_count = std::abs(nx) + std::abs(ny) + std::abs(nz);
        s.position = {image_coord(nx, scene.width, emitter.x), image_coord(ny, scene.depth, emitter.y),
                      image_coord(nz, scene.height, emitter.z)};
        s.amplitude = axis_gain(nx, b[kWallMinX], b[kWallMaxX]) * axis_gain(ny, b[kWallMinY], b[kWallMaxY]) *
                      axis_gain(nz, b[kWallMinZ], b[kWallMaxZ]);
        out.push_back(s);
      }
    }
  }
  return out;
}

std::array<Vec2, 2> ear_positions(Vec2 listener, int orientation, double ear_offset) {
  static constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
  static constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
  const double c = kCos[orientation & 3];
  const double s = kSin[orientation & 3];
  const Vec2 left{-s * ear_offset, c * ear_offset};
  return {listener + left, listener - left};
}

bool path_visible(const SceneGeometry& scene, Vec2 emitter, Vec2 ear, int nx, int ny) {
  if (scene.occluders.empty()) return true;
  const Segment path{{image_coord(nx, scene.width, emitter.x), image_coord(ny, scene.depth, emitter.y)}, ear};
  for (int i = std::min(0, nx); i <= std::max(0, nx); ++i) {
    for (int j = std::min(0, ny); j <= std::max(0, ny); ++j) {
      for (const Segment& occ : scene.occluders) {
        const Segment mirrored{mirror_into_cell(occ.a, i, j, scene), mirror_into_cell(occ.b, i, j, scene)};
        if (segments_intersect(path, mirrored)) return false;
      }
    }
  }
  return true;
}

ImpulseResponseRecord simulate_ir(const SceneGeometry& scene, const Pose& pose, const SimulationConfig& cfg) {
  scene.validate();
  if (cfg.max_order < 0) fail(ErrorKind::invalid_config, "max_order must be >= 0");
  if (!(cfg.sample_rate > 0.0)) fail(ErrorKind::invalid_config, "sample_rate must be positive");
  if (!(cfg.ear_height > 0.0 && cfg.ear_height < scene.height)) {
    fail(ErrorKind::invalid_config, "ear height must lie inside the room");
  }
  if (pose.orientation < 0 || pose.orientation >= kNumOrientations) {
    fail(ErrorKind::invalid_input, "orientation index must be in 0..3");
  }
  if (!scene.contains(pose.emitter)) fail(ErrorKind::invalid_input, "emitter outside the room footprint");
  const auto ears = ear_positions(pose.listener, pose.orientation, cfg.ear_offset);
  for (Vec2 e : ears) {
    if (!scene.contains(e)) fail(ErrorKind::invalid_input, "listener ear outside the room footprint");
  }

  const auto b = betas(scene);
  const int K = cfg.max_order;
  const double samples_per_meter = cfg.sample_rate / cfg.speed_of_sound;
  const double z = cfg.ear_height;

  ImpulseResponseRecord rec;
  rec.pose = pose;
  rec.sample_rate = cfg.sample_rate;

  for (std::size_t ch = 0; ch < 2; ++ch) {
    const Vec2 ear = ears[ch];
    const double direct = distance(pose.emitter, ear);
    if (static_cast<std::size_t>(std::floor(direct * samples_per_meter)) + 1 >= cfg.n_samples) {
      fail(ErrorKind::invalid_config, "n_samples is too short to contain the direct path");
    }

    // Visibility depends only on the floor-plane lattice index.
    const int side = 2 * K + 1;
    std::vector<char> visible(static_cast<std::size_t>(side * side));
    for (int nx = -K; nx <= K; ++nx) {
      for (int ny = -(K - std::abs(nx)); ny <= K - std::abs(nx); ++ny) {
        visible[static_cast<std::size_t>((nx + K) * side + (ny + K))] = path_visible(scene, pose.emitter, ear, nx, ny);
      }
    }

    std::vector<Arrival> arrivals;
    for (int nx = -K; nx <= K; ++nx) {
      const double dx = image_offset(nx, scene.width, pose.emitter.x, ear.x);
      const double gx = axis_gain(nx, b[kWallMinX], b[kWallMaxX]);
      const int rx = K - std::abs(nx);
      for (int ny = -rx; ny <= rx; ++ny) {
        if (!visible[static_cast<std::size_t>((nx + K) * side + (ny + K))]) continue;
        const double dy = image_offset(ny, scene.depth, pose.emitter.y, ear.y);
        const double gxy = gx * axis_gain(ny, b[kWallMinY], b[kWallMaxY]);
        const int rz = rx - std::abs(ny);
        for (int nz = -rz; nz <= rz; ++nz) {
          const double dz = image_offset(nz, scene.height, z, z);
          arrivals.push_back({std::sqrt(dx * dx + dy * dy + dz * dz), gxy * axis_gain(nz, b[kWallMinZ], b[kWallMaxZ])});
        }
      }
    }
    // Canonical accumulation order makes the sum independent of which end
    // is the emitter.
    std::sort(arrivals.begin(), arrivals.end());

    std::vector<double> acc(cfg.n_samples, 0.0);
    for (const Arrival& a : arrivals) {
      const double pos = a.distance * samples_per_meter;
      const double base = std::floor(pos);
      if (base >= static_cast<double>(cfg.n_samples)) continue;
      const auto i0 = static_cast<std::size_t>(base);
      const double frac = pos - base;
      const double amp = a.gain / a.distance;
      acc[i0] += amp * std::sqrt(1.0 - frac);
      if (i0 + 1 < cfg.n_samples) acc[i0 + 1] += amp * std::sqrt(frac);
    }
    rec.channels[ch].assign(acc.begin(), acc.end());
  }
  return rec;
}

std::vector<Vec2> probe_lattice(const SceneGeometry& scene, double spacing) {
  if (!(spacing > 0.0) || spacing >= std::min(scene.width, scene.depth)) {
    fail(ErrorKind::invalid_config, "probe spacing must be positive and smaller than the room");
  }
  const auto nx = static_cast<int>(std::floor(scene.width / spacing + 1e-9));
  const auto ny = static_cast<int>(std::floor(scene.depth / spacing + 1e-9));
  std::vector<Vec2> probes;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 p{spacing * (0.5 + i), spacing * (0.5 + j)};
      const bool clear = std::all_of(scene.occluders.begin(), scene.occluders.end(),
                                     [&](const Segment& s) { return point_segment_distance(p, s) >= 0.1; });
      if (clear && scene.contains(p)) probes.push_back(p);
    }
  }
  return probes;
}

Dataset build_dataset(const SceneGeometry& scene, const DatasetConfig& cfg) {
  scene.validate();
  cfg.stft.validate();
  if (!(cfg.subsample > 0.0 && cfg.subsample <= 1.0)) fail(ErrorKind::invalid_config, "subsample must lie in (0,1]");
  if (!(cfg.ir_duration > 0.0)) fail(ErrorKind::invalid_config, "ir_duration must be positive");
  const auto probes = probe_lattice(scene, cfg.probe_spacing);
  if (probes.size() < 2) fail(ErrorKind::invalid_config, "fewer than two probes fit in the scene");

  // Candidates enumerated as (emitter, listener, orientation), emitter != listener.
  const std::size_t np = probes.size();
  const std::size_t n_candidates = np * (np - 1) * kNumOrientations;
  auto n_keep = static_cast<std::size_t>(std::llround(cfg.subsample * static_cast<double>(n_candidates)));
  n_keep = std::clamp<std::size_t>(n_keep, 2, n_candidates);

  std::vector<std::size_t> chosen(n_candidates);
  for (std::size_t i = 0; i < n_candidates; ++i) chosen[i] = i;
  Rng rng(cfg.seed);
  for (std::size_t i = 0; i < n_keep; ++i) std::swap(chosen[i], chosen[i + rng.below(n_candidates - i)]);
  chosen.resize(n_keep);
  std::sort(chosen.begin(), chosen.end());

  SimulationConfig sim;
  sim.max_order = cfg.max_order;
  sim.sample_rate = cfg.sample_rate;
  sim.n_samples = static_cast<std::size_t>(std::ceil(cfg.ir_duration * cfg.sample_rate - 1e-9));
  sim.ear_offset = cfg.ear_offset;

  // Poses are stored as float32; simulate from the stored values.
  auto as_stored = [](Vec2 p) { return Vec2{static_cast<float>(p.x), static_cast<float>(p.y)}; };

  std::vector<ImpulseResponseRecord> records(n_keep);
  parallel_for(n_keep, cfg.workers, [&](std::size_t r) {
    const std::size_t c = chosen[r];
    const std::size_t orientation = c % kNumOrientations;
    const std::size_t pair = c / kNumOrientations;
    const std::size_t e = pair / (np - 1);
    std::size_t l = pair % (np - 1);
    if (l >= e) ++l;
    Pose pose{as_stored(probes[e]), as_stored(probes[l]), static_cast<int>(orientation)};
    records[r] = simulate_ir(scene, pose, sim);
  });

  Dataset ds;
  auto& m = ds.manifest;
  m.scene = scene;
  m.sample_rate = cfg.sample_rate;
  m.n_samples = sim.n_samples;
  m.n_records = n_keep;
  m.stft = cfg.stft;
  m.split_seed = Rng::mix(cfg.seed ^ 0x5eed5eedULL);
  const Split split = split_dataset(n_keep, cfg.test_fraction, m.split_seed);
  m.train_indices = split.train;
  m.test_indices = split.test;
  ds.records = std::move(records);
  return ds;
}

namespace {

SceneGeometry make_scene(double w, double d, double h, double walls, double floor, double ceiling,
                         std::vector<Segment> occluders) {
  SceneGeometry s;
  s.width = w;
  s.depth = d;
  s.height = h;
  s.absorption = {walls, walls, walls, walls, floor, ceiling};
  s.occluders = std::move(occluders);
  return s;
}

}  // namespace

std::vector<NamedScene> bundled_scenes() {
  return {
      // Partition at x = 2.5 with a 1 m doorway.
      {"two_room_a", make_scene(5.0, 3.0, 2.5, 0.25, 0.35, 0.3, {{{2.5, 0.0}, {2.5, 1.0}}, {{2.5, 2.0}, {2.5, 3.0}}})},
      {"two_room_b", make_scene(6.0, 4.0, 2.7, 0.2, 0.4, 0.3, {{{0.0, 2.0}, {3.5, 2.0}}, {{4.5, 2.0}, {6.0, 2.0}}})},
      {"l_shape_a", make_scene(5.0, 4.0, 2.5, 0.25, 0.35, 0.3, {{{3.0, 4.0}, {3.0, 2.8}}, {{3.0, 2.8}, {4.2, 2.8}}})},
      {"l_shape_b", make_scene(6.0, 5.0, 2.8, 0.2, 0.4, 0.25, {{{0.0, 1.6}, {1.6, 1.6}}, {{1.6, 1.6}, {1.6, 0.6}}})},
      {"shoebox_small", make_scene(4.0, 3.0, 2.5, 0.3, 0.4, 0.3, {})},
      {"shoebox_medium", make_scene(6.0, 4.0, 3.0, 0.2, 0.35, 0.25, {})},
  };
}

SceneGeometry bundled_scene(const std::string& name) {
  for (auto& s : bundled_scenes()) {
    if (s.name == name) return s.scene;
  }
  fail(ErrorKind::lookup, "no bundled scene named '" + name + "'");
}

}  // namespace naf::roomsim
