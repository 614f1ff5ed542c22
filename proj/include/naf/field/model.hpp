#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "naf/core/rng.hpp"
#include "naf/core/types.hpp"
#include "naf/diffcalc/graph.hpp"
#include "naf/field/encoding.hpp"
#include "naf/field/latent_grid.hpp"

namespace naf::field {

enum class GridMode { shared, dual, none };

std::string to_string(GridMode mode);
/// Throws invalid_config for unknown names.
GridMode grid_mode_from_string(const std::string& name);

struct ModelConfig {
  GridMode grid_mode = GridMode::shared;
  int layers = 4;  // fully connected layers including the output head
  int width = 128;
  int grid_dim = 16;
  double grid_spacing = 0.25;
  double grid_sigma = 0.25;
  int n_freq = kEncodingFrequencies;
  double pos_max_exp = kPositionMaxExp;
  double tf_max_exp = kTimeFreqMaxExp;
  double leaky_slope = 0.1;

  /// 4 x 128 trunk, 16-dim grid.
  static ModelConfig desk();
  /// 8 x 512 trunk, 64-dim grid.
  static ModelConfig paper();

  /// Intermediate outputs that receive embeddings: layers - 1.
  int n_intermediate() const { return layers - 1; }
  /// Intermediate output that receives the skip branch.
  int skip_index() const { return (layers - 1) / 2; }
  std::size_t pose_input_dim() const;
  std::size_t coord_input_dim() const { return static_cast<std::size_t>(4 * n_freq); }

  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Scene bounds and the signal layout the model was trained on.
struct FieldFrame {
  double width = 1.0;
  double depth = 1.0;
  int sample_rate = 16000;
  std::size_t n_samples = 8000;
  StftConfig stft;

  std::size_t n_freq_bins() const { return static_cast<std::size_t>(stft.n_freq()); }
  std::size_t n_frames() const { return static_cast<std::size_t>(stft.n_frames(n_samples)); }

  double scale_x(double x) const { return 2.0 * x / width - 1.0; }
  double scale_y(double y) const { return 2.0 * y / depth - 1.0; }
  double scale_t(double t) const;
  double scale_f(double f) const;

  friend bool operator==(const FieldFrame&, const FieldFrame&) = default;
};

template <typename T>
struct FieldParams {
  std::vector<LatentGrid<T>> grids;  // none: 0, shared: 1, dual: listener then emitter
  diffcalc::Tensor<T> w_in_pose, w_in_coord, b_in;
  std::vector<diffcalc::Tensor<T>> w_hidden, b_hidden;
  diffcalc::Tensor<T> w_out, b_out;
  diffcalc::Tensor<T> w_skip_pose, w_skip_coord, b_skip0, w_skip1, b_skip1;
  diffcalc::Tensor<T> orient_emb;  // [(layers-1) * 4, width], row = layer * 4 + orientation
  diffcalc::Tensor<T> ear_emb;     // [(layers-1) * 2, width], row = layer * 2 + ear

  /// Every learnable tensor in a fixed declared order.
  std::vector<std::pair<std::string, diffcalc::Tensor<T>*>> named();
  std::vector<diffcalc::Tensor<T>*> list();
  std::size_t count() const;

  template <typename U>
  FieldParams<U> cast() const;
};

template <typename T>
struct FieldModel {
  ModelConfig config;
  FieldFrame frame;
  FieldParams<T> params;
  NormStats norm;

  template <typename U>
  FieldModel<U> cast() const {
    return {config, frame, params.template cast<U>(), norm};
  }
};

/// Glorot-uniform weights, zero biases, N(0, 1/sqrt(dim)) embeddings and
/// grid features. Norm stats are left empty.
FieldModel<float> init_model(const ModelConfig& config, const FieldFrame& frame, std::uint64_t seed);

/// One (pose, ear) conditioning row. Positions are in meters and may carry
/// training noise.
struct PoseRow {
  Vec2 emitter;
  Vec2 listener;
  int orientation = 0;
  int ear = 0;
};

/// Spectrogram coordinates, each tied to a PoseRow. t and f are already in
/// scaled units.
struct CoordBatch {
  std::vector<std::size_t> pose;
  std::vector<double> t;
  std::vector<double> f;

  std::size_t size() const { return pose.size(); }
  void reserve(std::size_t n) {
    pose.reserve(n);
    t.reserve(n);
    f.reserve(n);
  }
  void push(std::size_t p, double ts, double fs) {
    pose.push_back(p);
    t.push_back(ts);
    f.push_back(fs);
  }
};

/// Parameters placed on a graph.
template <typename T>
struct BoundParams {
  std::vector<diffcalc::Var<T>> grid_features, grid_bandwidth;
  diffcalc::Var<T> w_in_pose, w_in_coord, b_in;
  std::vector<diffcalc::Var<T>> w_hidden, b_hidden;
  diffcalc::Var<T> w_out, b_out;
  diffcalc::Var<T> w_skip_pose, w_skip_coord, b_skip0, w_skip1, b_skip1;
  diffcalc::Var<T> orient_emb, ear_emb;
};

/// Trainable leaves when `track` is set (gradients go to each tensor's grad,
/// or to `sinks[i]` aligned with params.list()); constants otherwise.
template <typename T>
BoundParams<T> bind(diffcalc::Graph<T>& g, FieldParams<T>& params, bool track,
                    std::vector<std::vector<T>>* sinks = nullptr);

template <typename T>
struct ForwardResult {
  diffcalc::Var<T> output;       // [N, 1] normalized log-magnitude
  diffcalc::Var<T> last_hidden;  // [N, width] post-activation
  diffcalc::Var<T> pose_input;   // [P, pose_input_dim]
};

/// Model output for every coordinate row. Shape mismatches throw invalid_shape.
template <typename T>
ForwardResult<T> forward(diffcalc::Graph<T>& g, const BoundParams<T>& bound, const FieldModel<T>& model,
                         const std::vector<PoseRow>& poses, const CoordBatch& coords);

/// Per-pose input rows: grid features (listener, then emitter) followed by
/// the encodings of listener x, y and emitter x, y.
template <typename T>
diffcalc::Var<T> assemble_pose_input(diffcalc::Graph<T>& g, const BoundParams<T>& bound, const FieldModel<T>& model,
                                     const std::vector<PoseRow>& poses);

}  // namespace naf::field
