#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace naf {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double distance(Vec2 a, Vec2 b);

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Full-height interior wall between two floor points.
struct Segment {
  Vec2 a;
  Vec2 b;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Closed-segment intersection test in the floor plane.
bool segments_intersect(const Segment& s, const Segment& t);

/// Euclidean distance from a point to a closed segment.
double point_segment_distance(Vec2 p, const Segment& s);

/// Wall indices into SceneGeometry::absorption.
enum Wall : int { kWallMinX = 0, kWallMaxX, kWallMinY, kWallMaxY, kWallMinZ, kWallMaxZ };

/// Shoebox room with optional full-height interior occluders.
struct SceneGeometry {
  double width = 0.0;   // x extent, meters
  double depth = 0.0;   // y extent, meters
  double height = 0.0;  // z extent, meters
  std::array<double, 6> absorption{};  // energy absorption per wall, [0,1)
  std::vector<Segment> occluders;

  /// Throws invalid_config when dimensions, absorption or occluders are out of range.
  void validate() const;

  /// Strictly inside the floor rectangle.
  bool contains(Vec2 p) const;

  friend bool operator==(const SceneGeometry&, const SceneGeometry&) = default;
};

inline constexpr int kNumOrientations = 4;
inline constexpr int kNumEars = 2;

/// Emitter/listener placement with a discrete listener orientation.
struct Pose {
  Vec2 emitter;
  Vec2 listener;
  int orientation = 0;  // 0..3 -> 0, 90, 180, 270 degrees

  double orientation_degrees() const { return 90.0 * orientation; }

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// One binaural impulse response. Channel 0 is the left ear.
struct ImpulseResponseRecord {
  Pose pose;
  std::array<std::vector<float>, 2> channels;
  double sample_rate = 0.0;

  std::size_t n_samples() const { return channels[0].size(); }

  /// Throws invalid_dataset on unequal channel lengths or non-finite samples.
  void validate() const;
};

struct StftConfig {
  int fft_size = 512;
  int hop = 128;
  std::string window = "hann";

  int n_freq() const { return fft_size / 2 + 1; }
  /// Frames for a signal of `n_samples`: ceil(n / hop).
  int n_frames(std::size_t n_samples) const;

  /// Throws invalid_config unless the window/hop pair is usable.
  void validate() const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Row-major dense 2D array, rows = frequency bins, cols = frames for spectra.
template <typename T>
struct Array2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Array2D() = default;
  Array2D(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Array2D& o) const { return rows == o.rows && cols == o.cols; }
};

/// F x T natural-log magnitudes.
struct Spectrogram {
  Array2D<float> values;

  std::size_t n_freq() const { return values.rows; }
  std::size_t n_time() const { return values.cols; }
};

inline constexpr double kStdFloor = 1e-6;

/// Per-bin statistics used to normalize training targets.
struct NormStats {
  Array2D<float> mean;
  Array2D<float> std;
};

}  // namespace naf
