#include "naf/field/model.hpp"

#include <cmath>

#include "naf/core/error.hpp"

namespace naf::field {

using diffcalc::Graph;
using diffcalc::Shape;
using diffcalc::Tensor;
using diffcalc::Var;

std::string to_string(GridMode mode) {
  switch (mode) {
    case GridMode::shared: return "shared";
    case GridMode::dual: return "dual";
    case GridMode::none: return "none";
  }
  return "shared";
}

GridMode grid_mode_from_string(const std::string& name) {
  if (name == "shared") return GridMode::shared;
  if (name == "dual") return GridMode::dual;
  if (name == "none") return GridMode::none;
  fail(ErrorKind::invalid_config, "unknown grid mode '" + name + "' (expected shared, dual or none)");
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.layers = 8;
  c.width = 512;
  c.grid_dim = 64;
  return c;
}

std::size_t ModelConfig::pose_input_dim() const {
  const std::size_t grid = grid_mode == GridMode::none ? 0 : static_cast<std::size_t>(2 * grid_dim);
  return grid + static_cast<std::size_t>(8 * n_freq);
}

void ModelConfig::validate() const {
  if (layers < 2) fail(ErrorKind::invalid_config, "model needs at least 2 layers");
  if (width < 1 || grid_dim < 1 || n_freq < 1) fail(ErrorKind::invalid_config, "model sizes must be positive");
  // The evaluator writes the activation as max(v, slope * v).
  if (!(leaky_slope > 0.0) || leaky_slope > 1.0) fail(ErrorKind::invalid_config, "leaky slope must lie in (0, 1]");
  if (!(grid_spacing > 0.0) || !(grid_sigma > 0.0)) {
    fail(ErrorKind::invalid_config, "grid spacing and sigma must be positive");
  }
}

double FieldFrame::scale_t(double t) const {
  const double n = static_cast<double>(n_frames());
  return n > 1 ? 2.0 * t / (n - 1.0) - 1.0 : 0.0;
}

double FieldFrame::scale_f(double f) const {
  const double n = static_cast<double>(n_freq_bins());
  return n > 1 ? 2.0 * f / (n - 1.0) - 1.0 : 0.0;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> FieldParams<T>::named() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (std::size_t k = 0; k < grids.size(); ++k) {
    out.emplace_back("grid" + std::to_string(k) + ".features", &grids[k].features);
    out.emplace_back("grid" + std::to_string(k) + ".bandwidth", &grids[k].bandwidth);
  }
  out.emplace_back("in.w_pose", &w_in_pose);
  out.emplace_back("in.w_coord", &w_in_coord);
  out.emplace_back("in.b", &b_in);
  for (std::size_t i = 0; i < w_hidden.size(); ++i) {
    out.emplace_back("hidden" + std::to_string(i) + ".w", &w_hidden[i]);
    out.emplace_back("hidden" + std::to_string(i) + ".b", &b_hidden[i]);
  }
  out.emplace_back("out.w", &w_out);
  out.emplace_back("out.b", &b_out);
  out.emplace_back("skip.w_pose", &w_skip_pose);
  out.emplace_back("skip.w_coord", &w_skip_coord);
  out.emplace_back("skip.b0", &b_skip0);
  out.emplace_back("skip.w1", &w_skip1);
  out.emplace_back("skip.b1", &b_skip1);
  out.emplace_back("embed.orientation", &orient_emb);
  out.emplace_back("embed.ear", &ear_emb);
  return out;
}

template <typename T>
std::vector<Tensor<T>*> FieldParams<T>::list() {
  std::vector<Tensor<T>*> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

template <typename T>
std::size_t FieldParams<T>::count() const {
  std::size_t n = 0;
  for (auto& [name, t] : const_cast<FieldParams*>(this)->named()) n += t->size();
  return n;
}

template <typename T>
template <typename U>
FieldParams<U> FieldParams<T>::cast() const {
  FieldParams<U> out;
  for (const auto& g : grids) out.grids.push_back(g.template cast<U>());
  auto c = [](const Tensor<T>& t) { return t.template cast<U>(); };
  out.w_in_pose = c(w_in_pose);
  out.w_in_coord = c(w_in_coord);
  out.b_in = c(b_in);
  for (const auto& t : w_hidden) out.w_hidden.push_back(c(t));
  for (const auto& t : b_hidden) out.b_hidden.push_back(c(t));
  out.w_out = c(w_out);
  out.b_out = c(b_out);
  out.w_skip_pose = c(w_skip_pose);
  out.w_skip_coord = c(w_skip_coord);
  out.b_skip0 = c(b_skip0);
  out.w_skip1 = c(w_skip1);
  out.b_skip1 = c(b_skip1);
  out.orient_emb = c(orient_emb);
  out.ear_emb = c(ear_emb);
  return out;
}

template struct FieldParams<float>;
template struct FieldParams<double>;
template FieldParams<double> FieldParams<float>::cast<double>() const;
template FieldParams<float> FieldParams<double>::cast<float>() const;
template FieldParams<float> FieldParams<float>::cast<float>() const;

namespace {

Tensor<float> glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor<float> t({fan_in, fan_out});
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (float& v : t.values) v = static_cast<float>(rng.uniform(-limit, limit));
  t.enable_grad();
  return t;
}

// Splits a [a + b, n] matrix into its first a rows and last b rows.
std::pair<Tensor<float>, Tensor<float>> split_rows(const Tensor<float>& m, std::size_t a) {
  const std::size_t n = m.shape[1];
  const std::size_t b = m.shape[0] - a;
  Tensor<float> top({a, n}, std::vector<float>(m.values.begin(), m.values.begin() + static_cast<std::ptrdiff_t>(a * n)));
  Tensor<float> bottom({b, n}, std::vector<float>(m.values.begin() + static_cast<std::ptrdiff_t>(a * n), m.values.end()));
  top.enable_grad();
  bottom.enable_grad();
  return {std::move(top), std::move(bottom)};
}

Tensor<float> zeros(Shape shape) {
  Tensor<float> t(std::move(shape));
  t.enable_grad();
  return t;
}

Tensor<float> gaussian(Shape shape, double stddev, Rng& rng) {
  Tensor<float> t(std::move(shape));
  for (float& v : t.values) v = static_cast<float>(rng.normal(0.0, stddev));
  t.enable_grad();
  return t;
}

}  // namespace

FieldModel<float> init_model(const ModelConfig& config, const FieldFrame& frame, std::uint64_t seed) {
  config.validate();
  FieldModel<float> m;
  m.config = config;
  m.frame = frame;
  Rng rng(seed);
  auto& p = m.params;
  const std::size_t n_grids = config.grid_mode == GridMode::none ? 0 : config.grid_mode == GridMode::shared ? 1 : 2;
  for (std::size_t k = 0; k < n_grids; ++k) {
    p.grids.push_back(make_grid(frame.width, frame.depth, config.grid_spacing, static_cast<std::size_t>(config.grid_dim),
                                config.grid_sigma, rng));
  }
  const auto w = static_cast<std::size_t>(config.width);
  const std::size_t dp = config.pose_input_dim();
  const std::size_t dc = config.coord_input_dim();

  std::tie(p.w_in_pose, p.w_in_coord) = split_rows(glorot(dp + dc, w, rng), dp);
  p.b_in = zeros({w});
  for (int i = 0; i < config.layers - 2; ++i) {
    p.w_hidden.push_back(glorot(w, w, rng));
    p.b_hidden.push_back(zeros({w}));
  }
  p.w_out = glorot(w, 1, rng);
  p.b_out = zeros({1});
  std::tie(p.w_skip_pose, p.w_skip_coord) = split_rows(glorot(dp + dc, w, rng), dp);
  p.b_skip0 = zeros({w});
  p.w_skip1 = glorot(w, w, rng);
  p.b_skip1 = zeros({w});
  const auto inter = static_cast<std::size_t>(config.n_intermediate());
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(w));
  p.orient_emb = gaussian({inter * kNumOrientations, w}, emb_std, rng);
  p.ear_emb = gaussian({inter * kNumEars, w}, emb_std, rng);
  return m;
}

template <typename T>
BoundParams<T> bind(Graph<T>& g, FieldParams<T>& params, bool track, std::vector<std::vector<T>>* sinks) {
  auto tensors = params.list();
  if (sinks != nullptr && sinks->size() != tensors.size()) sinks->resize(tensors.size());
  std::size_t k = 0;
  auto put = [&](Tensor<T>& t) {
    const std::size_t idx = k++;
    if (!track) return g.constant(t.shape, t.values);
    return g.parameter(t, sinks != nullptr ? &(*sinks)[idx] : nullptr);
  };
  // Same order as FieldParams::named().
  BoundParams<T> b;
  for (auto& grid : params.grids) {
    b.grid_features.push_back(put(grid.features));
    b.grid_bandwidth.push_back(put(grid.bandwidth));
  }
  b.w_in_pose = put(params.w_in_pose);
  b.w_in_coord = put(params.w_in_coord);
  b.b_in = put(params.b_in);
  for (std::size_t i = 0; i < params.w_hidden.size(); ++i) {
    b.w_hidden.push_back(put(params.w_hidden[i]));
    b.b_hidden.push_back(put(params.b_hidden[i]));
  }
  b.w_out = put(params.w_out);
  b.b_out = put(params.b_out);
  b.w_skip_pose = put(params.w_skip_pose);
  b.w_skip_coord = put(params.w_skip_coord);
  b.b_skip0 = put(params.b_skip0);
  b.w_skip1 = put(params.w_skip1);
  b.b_skip1 = put(params.b_skip1);
  b.orient_emb = put(params.orient_emb);
  b.ear_emb = put(params.ear_emb);
  return b;
}

template <typename T>
Var<T> assemble_pose_input(Graph<T>& g, const BoundParams<T>& bound, const FieldModel<T>& model,
                           const std::vector<PoseRow>& poses) {
  const ModelConfig& cfg = model.config;
  const FieldFrame& frame = model.frame;
  const std::size_t n_pose = poses.size();
  const std::size_t enc_dim = static_cast<std::size_t>(2 * cfg.n_freq);

  std::vector<T> enc(n_pose * 4 * enc_dim);
  std::vector<double> buf(enc_dim);
  for (std::size_t p = 0; p < n_pose; ++p) {
    const double coords[4] = {frame.scale_x(poses[p].listener.x), frame.scale_y(poses[p].listener.y),
                              frame.scale_x(poses[p].emitter.x), frame.scale_y(poses[p].emitter.y)};
    for (int c = 0; c < 4; ++c) {
      sinusoidal_encode(coords[c], cfg.n_freq, cfg.pos_max_exp, buf);
      for (std::size_t j = 0; j < enc_dim; ++j) enc[(p * 4 + static_cast<std::size_t>(c)) * enc_dim + j] = static_cast<T>(buf[j]);
    }
  }
  Var<T> enc_var = g.constant({n_pose, 4 * enc_dim}, std::move(enc));
  if (cfg.grid_mode == GridMode::none) return enc_var;

  std::vector<Vec2> listeners(n_pose), emitters(n_pose);
  for (std::size_t p = 0; p < n_pose; ++p) {
    listeners[p] = poses[p].listener;
    emitters[p] = poses[p].emitter;
  }
  const std::size_t expected = cfg.grid_mode == GridMode::shared ? 1 : 2;
  if (model.params.grids.size() != expected || bound.grid_features.size() != expected) {
    fail(ErrorKind::invalid_shape, "forward: grid mode " + to_string(cfg.grid_mode) + " expects " +
                                       std::to_string(expected) + " grid(s)");
  }
  const auto pts0 = model.params.grids[0].points();
  Var<T> lf, ef;
  if (cfg.grid_mode == GridMode::shared) {
    std::vector<Vec2> both = listeners;
    both.insert(both.end(), emitters.begin(), emitters.end());
    Var<T> q = grid_query(bound.grid_features[0], bound.grid_bandwidth[0], std::span<const Vec2>(pts0),
                          std::span<const Vec2>(both));
    std::vector<std::size_t> first(n_pose), second(n_pose);
    for (std::size_t p = 0; p < n_pose; ++p) {
      first[p] = p;
      second[p] = n_pose + p;
    }
    lf = gather_rows(q, std::move(first));
    ef = gather_rows(q, std::move(second));
  } else {
    const auto pts1 = model.params.grids[1].points();
    lf = grid_query(bound.grid_features[0], bound.grid_bandwidth[0], std::span<const Vec2>(pts0),
                    std::span<const Vec2>(listeners));
    ef = grid_query(bound.grid_features[1], bound.grid_bandwidth[1], std::span<const Vec2>(pts1),
                    std::span<const Vec2>(emitters));
  }
  return diffcalc::concat<T>({lf, ef, enc_var});
}

template <typename T>
ForwardResult<T> forward(Graph<T>& g, const BoundParams<T>& bound, const FieldModel<T>& model,
                         const std::vector<PoseRow>& poses, const CoordBatch& coords) {
  const ModelConfig& cfg = model.config;
  const FieldFrame& frame = model.frame;
  const std::size_t n_pose = poses.size();
  const std::size_t n = coords.size();
  if (coords.t.size() != n || coords.f.size() != n) {
    fail(ErrorKind::invalid_shape, "forward: coordinate arrays differ in length");
  }
  if (n_pose == 0 || n == 0) fail(ErrorKind::invalid_shape, "forward: empty batch");
  for (std::size_t i = 0; i < n; ++i) {
    if (coords.pose[i] >= n_pose) fail(ErrorKind::invalid_shape, "forward: coordinate row refers to a missing pose");
  }
  for (const PoseRow& p : poses) {
    if (p.orientation < 0 || p.orientation >= kNumOrientations || p.ear < 0 || p.ear >= kNumEars) {
      fail(ErrorKind::invalid_input, "forward: orientation or ear index out of range");
    }
  }
  if (model.params.w_hidden.size() != static_cast<std::size_t>(cfg.layers - 2)) {
    fail(ErrorKind::invalid_shape, "forward: parameter set does not match the layer count");
  }
  (void)frame;

  Var<T> pose_in = assemble_pose_input(g, bound, model, poses);

  const std::size_t enc_dim = static_cast<std::size_t>(2 * cfg.n_freq);
  std::vector<T> cin(n * 2 * enc_dim);
  std::vector<double> buf(enc_dim);
  for (std::size_t i = 0; i < n; ++i) {
    sinusoidal_encode(coords.t[i], cfg.n_freq, cfg.tf_max_exp, buf);
    for (std::size_t j = 0; j < enc_dim; ++j) cin[i * 2 * enc_dim + j] = static_cast<T>(buf[j]);
    sinusoidal_encode(coords.f[i], cfg.n_freq, cfg.tf_max_exp, buf);
    for (std::size_t j = 0; j < enc_dim; ++j) cin[i * 2 * enc_dim + enc_dim + j] = static_cast<T>(buf[j]);
  }
  Var<T> coord_in = g.constant({n, 2 * enc_dim}, std::move(cin));

  const T slope = static_cast<T>(cfg.leaky_slope);
  // Pose-level conditioning for intermediate output i: embeddings plus the layer bias.
  auto conditioning = [&](int i, Var<T> bias) {
    std::vector<std::size_t> oi(n_pose), ei(n_pose);
    for (std::size_t p = 0; p < n_pose; ++p) {
      oi[p] = static_cast<std::size_t>(i * kNumOrientations + poses[p].orientation);
      ei[p] = static_cast<std::size_t>(i * kNumEars + poses[p].ear);
    }
    return add(add(gather_rows(bound.orient_emb, std::move(oi)), gather_rows(bound.ear_emb, std::move(ei))), bias);
  };

  const auto& rows = coords.pose;
  Var<T> s0 = dense(coord_in, bound.w_skip_coord, add(matmul(pose_in, bound.w_skip_pose), bound.b_skip0), rows,
                    static_cast<const Var<T>*>(nullptr), slope);
  Var<T> skip = dense(s0, bound.w_skip1, bound.b_skip1, {}, static_cast<const Var<T>*>(nullptr), T{1});

  const int skip_at = cfg.skip_index();
  Var<T> a = dense(coord_in, bound.w_in_coord, add(matmul(pose_in, bound.w_in_pose), conditioning(0, bound.b_in)), rows,
                   skip_at == 0 ? &skip : nullptr, slope);
  for (int i = 1; i < cfg.layers - 1; ++i) {
    const auto li = static_cast<std::size_t>(i - 1);
    a = dense(a, bound.w_hidden[li], conditioning(i, bound.b_hidden[li]), rows, i == skip_at ? &skip : nullptr, slope);
  }
  Var<T> out = dense(a, bound.w_out, bound.b_out, {}, static_cast<const Var<T>*>(nullptr), T{1});
  return {out, a, pose_in};
}

template BoundParams<float> bind(Graph<float>&, FieldParams<float>&, bool, std::vector<std::vector<float>>*);
template BoundParams<double> bind(Graph<double>&, FieldParams<double>&, bool, std::vector<std::vector<double>>*);
template Var<float> assemble_pose_input(Graph<float>&, const BoundParams<float>&, const FieldModel<float>&,
                                        const std::vector<PoseRow>&);
template Var<double> assemble_pose_input(Graph<double>&, const BoundParams<double>&, const FieldModel<double>&,
                                         const std::vector<PoseRow>&);
template ForwardResult<float> forward(Graph<float>&, const BoundParams<float>&, const FieldModel<float>&,
                                      const std::vector<PoseRow>&, const CoordBatch&);
template ForwardResult<double> forward(Graph<double>&, const BoundParams<double>&, const FieldModel<double>&,
                                       const std::vector<PoseRow>&, const CoordBatch&);

}  // namespace naf::field
