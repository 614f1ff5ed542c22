#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "naf/core/dataset.hpp"
#include "naf/core/types.hpp"

namespace naf::roomsim {

inline constexpr double kSpeedOfSound = 343.0;  // m/s
inline constexpr double kEarHeight = 1.5;       // m
inline constexpr double kEarOffset = 0.09;      // m, each side of the head center

/// Mirror image of the emitter. `amplitude` holds only the product of wall
/// reflection gains; spherical spreading (1/d) is applied at render time.
struct ImageSource {
  Vec3 position;
  double amplitude = 1.0;
  int reflection_count = 0;
  std::array<int, 3> lattice{};  // (nx, ny, nz)
};

/// One image per lattice index with |nx| + |ny| + |nz| <= max_order. Each
/// reflection off wall w scales the amplitude by sqrt(1 - absorption[w]).
std::vector<ImageSource> enumerate_image_sources(const SceneGeometry& scene, Vec3 emitter, int max_order);

struct SimulationConfig {
  int max_order = 20;
  double sample_rate = 16000.0;
  std::size_t n_samples = 8000;
  double ear_height = kEarHeight;
  double ear_offset = kEarOffset;  // 0 places both ears at the listener
  double speed_of_sound = kSpeedOfSound;
};

/// Left (index 0) and right ear floor positions for a listener facing
/// `orientation` * 90 degrees from +x.
std::array<Vec2, 2> ear_positions(Vec2 listener, int orientation, double ear_offset);

/// True when the folded reflection path from lattice cell (nx, ny) of the
/// emitter to `ear` crosses no occluder. Interior walls are mirrored into
/// every room copy the unfolded straight line passes through.
bool path_visible(const SceneGeometry& scene, Vec2 emitter, Vec2 ear, int nx, int ny);

/// Binaural image-source impulse response. Each unoccluded image adds an
/// impulse of amplitude gain / distance at distance / c seconds, split over
/// the two neighbouring samples with energy weights (1 - frac, frac).
ImpulseResponseRecord simulate_ir(const SceneGeometry& scene, const Pose& pose, const SimulationConfig& cfg);

/// Probe positions on a lattice inset from the walls by spacing / 2. Probes
/// closer than 0.1 m to an occluder are dropped.
std::vector<Vec2> probe_lattice(const SceneGeometry& scene, double spacing);

struct DatasetConfig {
  double probe_spacing = 0.5;
  int max_order = 20;
  double sample_rate = 16000.0;
  double ir_duration = 0.5;   // seconds
  double subsample = 1.0;     // fraction of (emitter, listener, orientation) candidates kept
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  StftConfig stft;
  double ear_offset = kEarOffset;
  int workers = 1;
};

/// Simulates a dataset over the probe lattice. Output depends only on
/// (scene, config) and not on the worker count.
Dataset build_dataset(const SceneGeometry& scene, const DatasetConfig& cfg);

struct NamedScene {
  std::string name;
  SceneGeometry scene;
};

/// The six bundled scenes: two multi-room, two with L-shaped partitions,
/// two plain shoeboxes.
std::vector<NamedScene> bundled_scenes();

/// Throws lookup when `name` is not a bundled scene.
SceneGeometry bundled_scene(const std::string& name);

}  // namespace naf::roomsim
