#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "naf/core/dataset.hpp"
#include "naf/field/model.hpp"

namespace naf::analysis {

enum class Method { naf, nearest, linear, codec_nearest, codec_linear };

std::string to_string(Method m);
/// Comma-separated names; "codec" expands to codec+nearest and codec+linear.
/// Throws usage on unknown names.
std::vector<Method> parse_methods(const std::string& csv);

struct MethodResult {
  std::string method;
  std::size_t n_records = 0;
  double spectral_loss = 0.0;  // mean over records and ears, log-magnitude MSE
  double t60_error_pct = 0.0;  // mean over valid (record, ear) pairs
  std::size_t t60_valid = 0;
  std::size_t t60_failures = 0;  // pairs where either side had no T60
  std::uintmax_t storage_bytes = 0;
};

struct EvalReport {
  std::string split;
  std::vector<MethodResult> methods;

  const MethodResult& at(const std::string& method) const;
  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Predicted binaural spectrograms and waveforms for one record.
struct Prediction {
  std::array<Spectrogram, 2> spectra;
  std::array<std::vector<double>, 2> waveforms;
};

/// Maps (index into the evaluated records, ground-truth record) to a prediction.
using Predictor = std::function<Prediction(std::size_t, const ImpulseResponseRecord&)>;

/// Scores one predictor against ground truth. Work is spread over records.
MethodResult score_predictions(const std::string& name, const std::vector<ImpulseResponseRecord>& truth,
                               const StftConfig& stft, const Predictor& predict, int workers);

/// Spectrograms and waveform of a time-domain prediction.
Prediction prediction_from_ir(const ImpulseResponseRecord& ir, const StftConfig& stft);

struct EvalOptions {
  std::vector<Method> methods = {Method::naf, Method::nearest, Method::linear};
  const field::FieldModel<float>* model = nullptr;
  bool test_split = true;  // false evaluates the training split
  int codec_bits = 8;
  int linear_k = 4;
  std::uint64_t seed = 0;  // random-phase seed base for rendered IRs
  int workers = 1;
  std::uintmax_t model_bytes = 0;
  std::uintmax_t dataset_bytes = 0;
};

/// Scores every requested method on the chosen split. NAF spectral loss uses
/// the field's log-magnitude prediction directly; its T60 uses the
/// random-phase rendering. Throws invalid_config when naf is requested
/// without a model.
EvalReport evaluate(const Dataset& dataset, const EvalOptions& options);

/// Mean NAF spectral loss over the test split (both ears).
double naf_test_loss(const Dataset& dataset, const field::FieldModel<float>& model, int workers);

}  // namespace naf::analysis
