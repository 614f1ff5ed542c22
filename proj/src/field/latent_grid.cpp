#include "naf/field/latent_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "naf/core/error.hpp"

namespace naf::field {

using diffcalc::Graph;
using diffcalc::Tensor;
using diffcalc::Var;

template <typename T>
std::vector<Vec2> LatentGrid<T>::points() const {
  std::vector<Vec2> out(n_points());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = point(k);
  return out;
}

template struct LatentGrid<float>;
template struct LatentGrid<double>;

LatentGrid<float> make_grid(double width, double depth, double spacing, std::size_t dim, double sigma, Rng& rng) {
  if (!(spacing > 0.0) || dim == 0) fail(ErrorKind::invalid_config, "grid needs positive spacing and dimension");
  LatentGrid<float> g;
  g.origin = {0.0, 0.0};
  g.spacing = spacing;
  g.nx = static_cast<std::size_t>(std::ceil(width / spacing - 1e-9)) + 1;
  g.ny = static_cast<std::size_t>(std::ceil(depth / spacing - 1e-9)) + 1;
  g.features = Tensor<float>({g.n_points(), dim});
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
  for (float& v : g.features.values) v = static_cast<float>(rng.normal(0.0, stddev));
  g.bandwidth = Tensor<float>({g.n_points()}, static_cast<float>(sigma));
  g.features.enable_grad();
  g.bandwidth.enable_grad();
  return g;
}

namespace {

// Log-kernel values and their max-shifted exponentials for one query; the
// shift cancels in the normalized weights and avoids underflow for small
// bandwidths.
template <typename T>
void kernel_weights(std::span<const Vec2> points, std::span<const T> bandwidth, Vec2 q, std::vector<double>& d2,
                    std::vector<double>& w) {
  const std::size_t n = points.size();
  d2.resize(n);
  w.resize(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = q.x - points[i].x;
    const double dy = q.y - points[i].y;
    d2[i] = dx * dx + dy * dy;
    const double s = static_cast<double>(bandwidth[i]);
    w[i] = -d2[i] / (2.0 * s * s);
    top = std::max(top, w[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(w[i] - top);
    total += w[i];
  }
  for (double& v : w) v /= total;
}

}  // namespace

std::vector<double> grid_weights(std::span<const Vec2> points, std::span<const double> bandwidth, Vec2 query) {
  std::vector<double> d2, w;
  kernel_weights<double>(points, bandwidth, query, d2, w);
  return w;
}

template <typename T>
Var<T> grid_query(Var<T> features, Var<T> bandwidth, std::span<const Vec2> points, std::span<const Vec2> queries) {
  Graph<T>& g = *features.graph();
  const auto& fs = features.shape();
  if (fs.size() != 2 || fs[0] != points.size() || bandwidth.value().size() != points.size()) {
    fail(ErrorKind::invalid_shape, "grid_query: features " + diffcalc::shape_string(fs) + " do not match " +
                                       std::to_string(points.size()) + " lattice points");
  }
  const std::size_t n = points.size();
  const std::size_t dim = fs[1];
  const std::size_t nq = queries.size();
  const auto f = features.value();
  const auto sigma = bandwidth.value();

  // Keep per-query weights for the backward pass.
  std::vector<double> weights(nq * n);
  std::vector<double> dist2(nq * n);
  std::vector<T> out(nq * dim, T{0});
  std::vector<double> d2, w, acc(dim);
  for (std::size_t q = 0; q < nq; ++q) {
    kernel_weights<T>(points, sigma, queries[q], d2, w);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] == 0.0) continue;
      const T* fi = f.data() + i * dim;
      for (std::size_t c = 0; c < dim; ++c) acc[c] += w[i] * static_cast<double>(fi[c]);
    }
    for (std::size_t c = 0; c < dim; ++c) out[q * dim + c] = static_cast<T>(acc[c]);
    std::copy(w.begin(), w.end(), weights.begin() + static_cast<std::ptrdiff_t>(q * n));
    std::copy(d2.begin(), d2.end(), dist2.begin() + static_cast<std::ptrdiff_t>(q * n));
  }

  return g.record(
      {nq, dim}, std::move(out), {features, bandwidth},
      [features, bandwidth, n, dim, nq, weights = std::move(weights), dist2 = std::move(dist2)](
          Graph<T>& g, std::span<const T> go) {
        const auto f = features.value();
        const auto sigma = bandwidth.value();
        const auto out = [&] {
          // Recover the forward output from the features and weights.
          std::vector<double> o(nq * dim, 0.0);
          for (std::size_t q = 0; q < nq; ++q) {
            for (std::size_t i = 0; i < n; ++i) {
              const double wi = weights[q * n + i];
              if (wi == 0.0) continue;
              for (std::size_t c = 0; c < dim; ++c) o[q * dim + c] += wi * static_cast<double>(f[i * dim + c]);
            }
          }
          return o;
        }();
        const bool want_f = g.needs_grad(features);
        const bool want_s = g.needs_grad(bandwidth);
        std::span<T> gf = want_f ? g.grad_of(features) : std::span<T>{};
        std::span<T> gs = want_s ? g.grad_of(bandwidth) : std::span<T>{};
        for (std::size_t q = 0; q < nq; ++q) {
          const T* gq = go.data() + q * dim;
          for (std::size_t i = 0; i < n; ++i) {
            const double wi = weights[q * n + i];
            if (wi == 0.0) continue;
            const T* fi = f.data() + i * dim;
            double dot = 0.0;  // g_q . (f_i - out_q)
            for (std::size_t c = 0; c < dim; ++c) {
              if (want_f) gf[i * dim + c] += static_cast<T>(wi * static_cast<double>(gq[c]));
              dot += static_cast<double>(gq[c]) * (static_cast<double>(fi[c]) - out[q * dim + c]);
            }
            if (want_s) {
              const double s = static_cast<double>(sigma[i]);
              gs[i] += static_cast<T>(dot * wi * dist2[q * n + i] / (s * s * s));
            }
          }
        }
      });
}

template Var<float> grid_query<float>(Var<float>, Var<float>, std::span<const Vec2>, std::span<const Vec2>);
template Var<double> grid_query<double>(Var<double>, Var<double>, std::span<const Vec2>, std::span<const Vec2>);

void clamp_bandwidth(LatentGrid<float>& grid) {
  for (float& s : grid.bandwidth.values) s = std::max(s, static_cast<float>(kBandwidthFloor));
}

}  // namespace naf::field
