#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "naf/core/types.hpp"
#include "naf/field/inference.hpp"

namespace naf::field {

/// Row-major grid of loudness values; row r, column c covers the cell
/// centered at ((c + 0.5) * res, (r + 0.5) * res), pulled inside the room
/// when the extent is not a multiple of res.
struct LoudnessMap {
  double resolution = 0.0;
  std::size_t rows = 0;  // ceil(depth / res)
  std::size_t cols = 0;  // ceil(width / res)
  std::vector<Vec2> centers;
  std::vector<double> db;
};

/// Cell layout without values.
LoudnessMap map_layout(double width, double depth, double resolution);

/// Fills a layout with loudness(ir) for a binaural IR source per cell
/// (listener at the cell center, orientation 0); both ears are pooled.
using BinauralSource = std::function<std::array<std::vector<double>, 2>(std::size_t cell, Vec2 listener)>;
LoudnessMap fill_loudness_map(LoudnessMap layout, const BinauralSource& source, int workers);

/// Model map: random-phase IRs rendered per cell with seed + cell index.
LoudnessMap render_loudness_map(const FieldEvaluator& eval, Vec2 emitter, double resolution, std::uint64_t seed,
                                int workers);

/// CSV with header x,y,db, one row per cell in row-major order.
void write_map_csv(const LoudnessMap& map, const std::filesystem::path& path);
/// Binary 8-bit PGM, black at the minimum and white at the maximum dB.
void write_map_pgm(const LoudnessMap& map, const std::filesystem::path& path);

}  // namespace naf::field
