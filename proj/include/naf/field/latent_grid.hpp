#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "naf/core/rng.hpp"
#include "naf/core/types.hpp"
#include "naf/diffcalc/graph.hpp"

namespace naf::field {

inline constexpr double kBandwidthFloor = 1e-3;

/// Regular 2D lattice of learnable features with a learnable Gaussian
/// bandwidth per point. Point (i, j) sits at origin + spacing * (i, j) and
/// is stored at row j * nx + i.
template <typename T>
struct LatentGrid {
  Vec2 origin;
  double spacing = 0.25;
  std::size_t nx = 0;
  std::size_t ny = 0;
  diffcalc::Tensor<T> features;   // [nx * ny, dim]
  diffcalc::Tensor<T> bandwidth;  // [nx * ny]

  std::size_t n_points() const { return nx * ny; }
  std::size_t dim() const { return features.shape.empty() ? 0 : features.shape[1]; }
  Vec2 point(std::size_t k) const {
    return {origin.x + spacing * static_cast<double>(k % nx), origin.y + spacing * static_cast<double>(k / nx)};
  }
  std::vector<Vec2> points() const;

  template <typename U>
  LatentGrid<U> cast() const {
    return {origin, spacing, nx, ny, features.template cast<U>(), bandwidth.template cast<U>()};
  }
};

/// Lattice covering [0, width] x [0, depth]; features ~ N(0, 1/sqrt(dim)),
/// bandwidths = sigma.
LatentGrid<float> make_grid(double width, double depth, double spacing, std::size_t dim, double sigma, Rng& rng);

/// Nadaraya-Watson query: out_q = sum_i w_qi f_i with
/// w_qi = K_qi / sum_j K_qj and K_qi = exp(-|x_q - p_i|^2 / (2 sigma_i^2)).
/// Differentiable in features and bandwidths. Returns [queries, dim].
template <typename T>
diffcalc::Var<T> grid_query(diffcalc::Var<T> features, diffcalc::Var<T> bandwidth, std::span<const Vec2> points,
                            std::span<const Vec2> queries);

/// Normalized kernel weights for one query (diagnostics and tests).
std::vector<double> grid_weights(std::span<const Vec2> points, std::span<const double> bandwidth, Vec2 query);

/// Clamps bandwidths to at least kBandwidthFloor.
void clamp_bandwidth(LatentGrid<float>& grid);

}  // namespace naf::field
