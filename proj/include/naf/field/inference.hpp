#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "naf/core/types.hpp"
#include "naf/field/model.hpp"

namespace naf::field {

/// Evaluation-mode forward pass over the full (t, f) lattice without a
/// gradient tape. The pose-independent parts of the first layer and the skip
/// branch are computed once per model.
class FieldEvaluator {
 public:
  explicit FieldEvaluator(const FieldModel<float>& model);

  const FieldModel<float>& model() const { return *model_; }
  std::size_t n_freq() const { return n_freq_; }
  std::size_t n_time() const { return n_time_; }

  /// Normalized predictions, F x T.
  Array2D<float> predict_normalized(const PoseRow& pose) const;

  /// Log-magnitude spectrogram, F x T.
  Spectrogram predict(const PoseRow& pose) const;

  /// Mean over all (t, f) of the last hidden layer (post-activation).
  std::vector<double> mean_last_hidden(const PoseRow& pose) const;

 private:
  using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using RowVec = Eigen::Matrix<float, 1, Eigen::Dynamic>;

  struct PoseTerms {
    RowVec in;                  // first layer, including conditioning and bias
    RowVec skip;                // skip branch first layer, including bias
    std::vector<RowVec> layer;  // conditioning + bias for hidden layers 1..L-2
  };

  PoseTerms pose_terms(const PoseRow& pose) const;
  // Runs rows [r0, r1) and calls sink(r0, last_hidden block, output block).
  template <typename Sink>
  void run(const PoseTerms& terms, Sink&& sink) const;

  const FieldModel<float>* model_;
  std::size_t n_freq_ = 0;
  std::size_t n_time_ = 0;
  Mat coord_in_;    // [F*T, W], row = f * T + t
  Mat coord_skip_;  // [F*T, W]
};

/// Spectrogram for one pose and ear.
Spectrogram render_spectrogram(const FieldEvaluator& eval, const Pose& pose, int ear);

/// Binaural waveform via random-phase inversion, n_samples long per ear.
/// The right ear uses seed + 1.
std::array<std::vector<double>, 2> render_ir(const FieldEvaluator& eval, const Pose& pose, std::uint64_t seed);

}  // namespace naf::field
