#include "naf/field/inference.hpp"

#include <algorithm>

#include "naf/core/error.hpp"
#include "naf/dsp/stft.hpp"
#include "naf/field/encoding.hpp"
#include "naf/field/training.hpp"

namespace naf::field {

namespace {

constexpr std::size_t kBlockRows = 1024;

using MatC = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

MatC as_matrix(const diffcalc::Tensor<float>& t) {
  const auto cols = t.shape.size() == 2 ? static_cast<Eigen::Index>(t.shape[1]) : static_cast<Eigen::Index>(t.size());
  const auto rows = t.shape.size() == 2 ? static_cast<Eigen::Index>(t.shape[0]) : Eigen::Index{1};
  return MatC(t.values.data(), rows, cols);
}

template <typename M>
void leaky(M&& m, float slope) {
  m = m.cwiseMax(m * slope);
}

}  // namespace

FieldEvaluator::FieldEvaluator(const FieldModel<float>& model) : model_(&model) {
  const ModelConfig& cfg = model.config;
  n_freq_ = model.frame.n_freq_bins();
  n_time_ = model.frame.n_frames();
  if (model.norm.mean.rows != n_freq_ || model.norm.mean.cols != n_time_) {
    fail(ErrorKind::invalid_shape, "evaluator: norm stats do not match the model's spectrogram shape");
  }
  const std::size_t enc = static_cast<std::size_t>(2 * cfg.n_freq);
  Mat coords(static_cast<Eigen::Index>(n_freq_ * n_time_), static_cast<Eigen::Index>(2 * enc));
  std::vector<double> buf(enc);
  std::vector<std::vector<double>> t_enc(n_time_);
  for (std::size_t t = 0; t < n_time_; ++t) {
    t_enc[t] = sinusoidal_encode(model.frame.scale_t(static_cast<double>(t)), cfg.n_freq, cfg.tf_max_exp);
  }
  for (std::size_t f = 0; f < n_freq_; ++f) {
    sinusoidal_encode(model.frame.scale_f(static_cast<double>(f)), cfg.n_freq, cfg.tf_max_exp, buf);
    for (std::size_t t = 0; t < n_time_; ++t) {
      const auto r = static_cast<Eigen::Index>(f * n_time_ + t);
      for (std::size_t j = 0; j < enc; ++j) {
        coords(r, static_cast<Eigen::Index>(j)) = static_cast<float>(t_enc[t][j]);
        coords(r, static_cast<Eigen::Index>(enc + j)) = static_cast<float>(buf[j]);
      }
    }
  }
  coord_in_ = coords * as_matrix(model.params.w_in_coord);
  coord_skip_ = coords * as_matrix(model.params.w_skip_coord);
}

FieldEvaluator::PoseTerms FieldEvaluator::pose_terms(const PoseRow& pose) const {
  const FieldModel<float>& m = *model_;
  // The pose input comes from the same assembly code as training.
  diffcalc::Graph<float> g;
  BoundParams<float> bound;
  auto& params = const_cast<FieldParams<float>&>(m.params);
  for (auto& grid : params.grids) {
    bound.grid_features.push_back(g.constant(grid.features.shape, grid.features.values));
    bound.grid_bandwidth.push_back(g.constant(grid.bandwidth.shape, grid.bandwidth.values));
  }
  const auto in = assemble_pose_input(g, bound, m, {pose}).value();
  if (pose.orientation < 0 || pose.orientation >= kNumOrientations || pose.ear < 0 || pose.ear >= kNumEars) {
    fail(ErrorKind::invalid_input, "evaluator: orientation or ear index out of range");
  }
  const Eigen::Map<const RowVec> x(in.data(), static_cast<Eigen::Index>(in.size()));
  const MatC orient = as_matrix(m.params.orient_emb);
  const MatC ear = as_matrix(m.params.ear_emb);
  auto cond = [&](int i) -> RowVec {
    return orient.row(i * kNumOrientations + pose.orientation) + ear.row(i * kNumEars + pose.ear);
  };
  PoseTerms terms;
  terms.in = x * as_matrix(m.params.w_in_pose) + as_matrix(m.params.b_in) + cond(0);
  terms.skip = x * as_matrix(m.params.w_skip_pose) + as_matrix(m.params.b_skip0);
  for (std::size_t i = 0; i < m.params.w_hidden.size(); ++i) {
    terms.layer.push_back(as_matrix(m.params.b_hidden[i]) + cond(static_cast<int>(i) + 1));
  }
  return terms;
}

template <typename Sink>
void FieldEvaluator::run(const PoseTerms& terms, Sink&& sink) const {
  const FieldModel<float>& m = *model_;
  const float slope = static_cast<float>(m.config.leaky_slope);
  const int skip_at = m.config.skip_index();
  const std::size_t total = n_freq_ * n_time_;
  const MatC w_skip1 = as_matrix(m.params.w_skip1);
  const MatC b_skip1 = as_matrix(m.params.b_skip1);
  const MatC w_out = as_matrix(m.params.w_out);
  const float b_out = m.params.b_out.values[0];
  Mat s, h, a, out;
  for (std::size_t r0 = 0; r0 < total; r0 += kBlockRows) {
    const auto rows = static_cast<Eigen::Index>(std::min(kBlockRows, total - r0));
    const auto start = static_cast<Eigen::Index>(r0);
    s = coord_skip_.middleRows(start, rows).rowwise() + terms.skip;
    leaky(s, slope);
    Mat skip = s * w_skip1;
    skip.rowwise() += b_skip1.row(0);

    h = coord_in_.middleRows(start, rows).rowwise() + terms.in;
    if (skip_at == 0) h += skip;
    leaky(h, slope);
    for (std::size_t i = 0; i < m.params.w_hidden.size(); ++i) {
      a.noalias() = h * as_matrix(m.params.w_hidden[i]);
      a.rowwise() += terms.layer[i];
      if (static_cast<int>(i) + 1 == skip_at) a += skip;
      leaky(a, slope);
      h.swap(a);
    }
    out.noalias() = h * w_out;
    out.array() += b_out;
    sink(r0, h, out);
  }
}

Array2D<float> FieldEvaluator::predict_normalized(const PoseRow& pose) const {
  Array2D<float> out(n_freq_, n_time_);
  run(pose_terms(pose), [&](std::size_t r0, const Mat&, const Mat& o) {
    for (Eigen::Index i = 0; i < o.rows(); ++i) out.data[r0 + static_cast<std::size_t>(i)] = o(i, 0);
  });
  return out;
}

Spectrogram FieldEvaluator::predict(const PoseRow& pose) const {
  Array2D<float> v = predict_normalized(pose);
  const NormStats& ns = model_->norm;
  for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = denormalize_value(v.data[i], ns.mean.data[i], ns.std.data[i]);
  return Spectrogram{std::move(v)};
}

std::vector<double> FieldEvaluator::mean_last_hidden(const PoseRow& pose) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(model_->config.width);
  run(pose_terms(pose), [&](std::size_t, const Mat& h, const Mat&) {
    acc += h.cast<double>().colwise().sum().transpose();
  });
  acc /= static_cast<double>(n_freq_ * n_time_);
  return {acc.data(), acc.data() + acc.size()};
}

Spectrogram render_spectrogram(const FieldEvaluator& eval, const Pose& pose, int ear) {
  return eval.predict(PoseRow{pose.emitter, pose.listener, pose.orientation, ear});
}

std::array<std::vector<double>, 2> render_ir(const FieldEvaluator& eval, const Pose& pose, std::uint64_t seed) {
  const FieldFrame& frame = eval.model().frame;
  std::array<std::vector<double>, 2> out;
  for (int ear = 0; ear < kNumEars; ++ear) {
    out[static_cast<std::size_t>(ear)] = dsp::random_phase_inverse(render_spectrogram(eval, pose, ear), frame.stft,
                                                                   seed + static_cast<std::uint64_t>(ear), frame.n_samples);
  }
  return out;
}

}  // namespace naf::field
