#include "naf/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "naf/core/error.hpp"

namespace naf {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool on_segment(Vec2 p, const Segment& s) {
  return std::min(s.a.x, s.b.x) <= p.x && p.x <= std::max(s.a.x, s.b.x) &&
         std::min(s.a.y, s.b.y) <= p.y && p.y <= std::max(s.a.y, s.b.y);
}

}  // namespace

bool segments_intersect(const Segment& s, const Segment& t) {
  const int d1 = sign(cross(t.a, t.b, s.a));
  const int d2 = sign(cross(t.a, t.b, s.b));
  const int d3 = sign(cross(s.a, s.b, t.a));
  const int d4 = sign(cross(s.a, s.b, t.b));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(s.a, t)) return true;
  if (d2 == 0 && on_segment(s.b, t)) return true;
  if (d3 == 0 && on_segment(t.a, s)) return true;
  if (d4 == 0 && on_segment(t.b, s)) return true;
  return false;
}

double point_segment_distance(Vec2 p, const Segment& s) {
  const Vec2 ab = s.b - s.a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return distance(p, s.a);
  const Vec2 ap = p - s.a;
  const double u = std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0);
  return distance(p, s.a + u * ab);
}

void SceneGeometry::validate() const {
  if (!(width > 0.0) || !(depth > 0.0) || !(height > 0.0)) {
    fail(ErrorKind::invalid_config, "scene dimensions must be positive");
  }
  for (double a : absorption) {
    if (!(a >= 0.0 && a < 1.0)) fail(ErrorKind::invalid_config, "wall absorption must lie in [0,1)");
  }
  for (const Segment& s : occluders) {
    for (Vec2 p : {s.a, s.b}) {
      if (!(p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= depth)) {
        fail(ErrorKind::invalid_config, "occluder endpoint outside the room footprint");
      }
    }
  }
}

bool SceneGeometry::contains(Vec2 p) const {
  return p.x > 0.0 && p.x < width && p.y > 0.0 && p.y < depth;
}

void ImpulseResponseRecord::validate() const {
  if (channels[0].size() != channels[1].size()) {
    fail(ErrorKind::invalid_dataset, "record channels differ in length");
  }
  for (const auto& ch : channels) {
    if (!std::all_of(ch.begin(), ch.end(), [](float v) { return std::isfinite(v); })) {
      fail(ErrorKind::invalid_dataset, "record contains non-finite samples");
    }
  }
  if (pose.orientation < 0 || pose.orientation >= kNumOrientations) {
    fail(ErrorKind::invalid_dataset, "orientation index out of range");
  }
}

int StftConfig::n_frames(std::size_t n_samples) const {
  return static_cast<int>((n_samples + static_cast<std::size_t>(hop) - 1) / static_cast<std::size_t>(hop));
}

void StftConfig::validate() const {
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0) {
    fail(ErrorKind::invalid_config, "fft_size must be a power of two");
  }
  if (hop <= 0 || hop > fft_size) fail(ErrorKind::invalid_config, "hop must lie in (0, fft_size]");
  if (window != "hann") fail(ErrorKind::invalid_config, "unsupported window '" + window + "'");
  // Periodic Hann overlap-adds to a constant for hops dividing fft_size/2.
  if ((fft_size / 2) % hop != 0) {
    fail(ErrorKind::invalid_config, "hop must divide fft_size/2 for constant overlap-add");
  }
}

}  // namespace naf
