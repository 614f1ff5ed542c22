#include "naf/field/loudness_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "naf/core/error.hpp"
#include "naf/core/parallel.hpp"
#include "naf/dsp/signal.hpp"

namespace naf::field {

LoudnessMap map_layout(double width, double depth, double resolution) {
  if (!(resolution > 0.0) || !(width > 0.0) || !(depth > 0.0)) {
    fail(ErrorKind::invalid_config, "loudness map needs a positive resolution and room extent");
  }
  LoudnessMap m;
  m.resolution = resolution;
  m.rows = static_cast<std::size_t>(std::ceil(depth / resolution - 1e-9));
  m.cols = static_cast<std::size_t>(std::ceil(width / resolution - 1e-9));
  const double margin = 1e-3;
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double x = std::min((static_cast<double>(c) + 0.5) * resolution, width - margin);
      const double y = std::min((static_cast<double>(r) + 0.5) * resolution, depth - margin);
      m.centers.push_back({x, y});
    }
  }
  m.db.assign(m.centers.size(), 0.0);
  return m;
}

LoudnessMap fill_loudness_map(LoudnessMap layout, const BinauralSource& source, int workers) {
  parallel_for(layout.centers.size(), workers, [&](std::size_t i) {
    const auto ir = source(i, layout.centers[i]);
    std::vector<double> both(ir[0]);
    both.insert(both.end(), ir[1].begin(), ir[1].end());
    layout.db[i] = dsp::loudness_db(both);
  });
  return layout;
}

LoudnessMap render_loudness_map(const FieldEvaluator& eval, Vec2 emitter, double resolution, std::uint64_t seed,
                                int workers) {
  const FieldFrame& frame = eval.model().frame;
  return fill_loudness_map(map_layout(frame.width, frame.depth, resolution),
                           [&](std::size_t cell, Vec2 listener) {
                             return render_ir(eval, Pose{emitter, listener, 0}, seed + 2 * cell);
                           },
                           workers);
}

void write_map_csv(const LoudnessMap& map, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::io, "cannot write " + path.string());
  os << "x,y,db\n";
  os.precision(9);
  for (std::size_t i = 0; i < map.centers.size(); ++i) {
    os << map.centers[i].x << ',' << map.centers[i].y << ',' << map.db[i] << '\n';
  }
}

void write_map_pgm(const LoudnessMap& map, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot write " + path.string());
  const auto [lo, hi] = std::minmax_element(map.db.begin(), map.db.end());
  const double span = map.db.empty() ? 0.0 : *hi - *lo;
  os << "P5\n" << map.cols << ' ' << map.rows << "\n255\n";
  // PGM rows run top to bottom; put the largest y first so the image is upright.
  for (std::size_t r = map.rows; r-- > 0;) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      const double v = map.db[r * map.cols + c];
      const double u = span > 0.0 ? (v - *lo) / span : 0.0;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * u))));
    }
  }
}

}  // namespace naf::field
