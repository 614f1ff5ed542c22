#include "naf/analysis/evaluate.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "naf/baselines/codec.hpp"
#include "naf/baselines/interpolation.hpp"
#include "naf/core/error.hpp"
#include "naf/core/parallel.hpp"
#include "naf/dsp/signal.hpp"
#include "naf/dsp/stft.hpp"
#include "naf/field/inference.hpp"

namespace naf::analysis {

std::string to_string(Method m) {
  switch (m) {
    case Method::naf: return "naf";
    case Method::nearest: return "nearest";
    case Method::linear: return "linear";
    case Method::codec_nearest: return "codec+nearest";
    case Method::codec_linear: return "codec+linear";
  }
  return "naf";
}

std::vector<Method> parse_methods(const std::string& csv) {
  std::vector<Method> out;
  auto add = [&](Method m) {
    for (Method x : out) {
      if (x == m) return;
    }
    out.push_back(m);
  };
  std::stringstream ss(csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "naf") add(Method::naf);
    else if (name == "nearest") add(Method::nearest);
    else if (name == "linear") add(Method::linear);
    else if (name == "codec") {
      add(Method::codec_nearest);
      add(Method::codec_linear);
    } else if (name == "codec+nearest") add(Method::codec_nearest);
    else if (name == "codec+linear") add(Method::codec_linear);
    else fail(ErrorKind::usage, "unknown method '" + name + "'");
  }
  if (out.empty()) fail(ErrorKind::usage, "no methods given");
  return out;
}

const MethodResult& EvalReport::at(const std::string& method) const {
  for (const auto& m : methods) {
    if (m.method == method) return m;
  }
  fail(ErrorKind::lookup, "report has no method '" + method + "'");
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["split"] = split;
  j["methods"] = nlohmann::json::array();
  for (const auto& m : methods) {
    j["methods"].push_back({{"method", m.method},
                            {"n_records", m.n_records},
                            {"spectral_loss", m.spectral_loss},
                            {"t60_error_pct", m.t60_error_pct},
                            {"t60_valid", m.t60_valid},
                            {"t60_failures", m.t60_failures},
                            {"storage_bytes", m.storage_bytes}});
  }
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(16) << "method" << std::right << std::setw(10) << "records" << std::setw(12)
     << "spectral" << std::setw(10) << "T60 %" << std::setw(10) << "T60 fail" << std::setw(14) << "bytes" << '\n';
  for (const auto& m : methods) {
    os << std::left << std::setw(16) << m.method << std::right << std::setw(10) << m.n_records << std::setw(12)
       << std::fixed << std::setprecision(4) << m.spectral_loss << std::setw(10) << std::setprecision(2)
       << m.t60_error_pct << std::setw(10) << m.t60_failures << std::setw(14) << m.storage_bytes << '\n';
  }
  return os.str();
}

Prediction prediction_from_ir(const ImpulseResponseRecord& ir, const StftConfig& stft) {
  Prediction p;
  for (std::size_t ear = 0; ear < 2; ++ear) {
    p.waveforms[ear] = dsp::to_double(ir.channels[ear]);
    p.spectra[ear] = dsp::log_spectrogram(p.waveforms[ear], stft);
  }
  return p;
}

MethodResult score_predictions(const std::string& name, const std::vector<ImpulseResponseRecord>& truth,
                               const StftConfig& stft, const Predictor& predict, int workers) {
  struct PerRecord {
    double loss = 0.0;
    double t60_sum = 0.0;
    std::size_t valid = 0;
    std::size_t failures = 0;
  };
  std::vector<PerRecord> per(truth.size());
  parallel_for(truth.size(), workers, [&](std::size_t i) {
    const ImpulseResponseRecord& gt = truth[i];
    const Prediction pred = predict(i, gt);
    const Prediction ref = prediction_from_ir(gt, stft);
    PerRecord& r = per[i];
    for (std::size_t ear = 0; ear < 2; ++ear) {
      r.loss += 0.5 * dsp::spectral_loss(pred.spectra[ear], ref.spectra[ear]);
      const auto t_pred = dsp::estimate_t60(pred.waveforms[ear], gt.sample_rate);
      const auto t_gt = dsp::estimate_t60(ref.waveforms[ear], gt.sample_rate);
      if (t_pred && t_gt) {
        r.t60_sum += 100.0 * std::abs(*t_pred - *t_gt) / *t_gt;
        ++r.valid;
      } else {
        ++r.failures;
      }
    }
  });
  MethodResult out;
  out.method = name;
  out.n_records = truth.size();
  double t60 = 0.0;
  for (const auto& r : per) {
    out.spectral_loss += r.loss;
    t60 += r.t60_sum;
    out.t60_valid += r.valid;
    out.t60_failures += r.failures;
  }
  if (!truth.empty()) out.spectral_loss /= static_cast<double>(truth.size());
  out.t60_error_pct = out.t60_valid > 0 ? t60 / static_cast<double>(out.t60_valid) : 0.0;
  return out;
}

namespace {

Predictor naf_predictor(const field::FieldEvaluator& eval, std::uint64_t seed) {
  return [&eval, seed](std::size_t i, const ImpulseResponseRecord& gt) {
    Prediction p;
    const field::FieldFrame& frame = eval.model().frame;
    for (int ear = 0; ear < kNumEars; ++ear) {
      const auto e = static_cast<std::size_t>(ear);
      p.spectra[e] = field::render_spectrogram(eval, gt.pose, ear);
      p.waveforms[e] = dsp::random_phase_inverse(p.spectra[e], frame.stft, seed + 2 * i + e, frame.n_samples);
    }
    return p;
  };
}

}  // namespace

EvalReport evaluate(const Dataset& dataset, const EvalOptions& options) {
  const auto train = dataset.train_records();
  const auto truth = options.test_split ? dataset.test_records() : train;
  const StftConfig& stft = dataset.manifest.stft;
  EvalReport report;
  report.split = options.test_split ? "test" : "train";

  std::vector<ImpulseResponseRecord> decoded;
  std::uintmax_t codec_bytes = 0;
  for (Method m : options.methods) {
    if ((m == Method::codec_nearest || m == Method::codec_linear) && decoded.empty()) {
      const auto blob = baselines::encode_records(train, options.codec_bits);
      codec_bytes = blob.size();
      decoded = baselines::decode_records(blob, train);
    }
  }

  for (Method m : options.methods) {
    const std::string name = to_string(m);
    MethodResult r;
    if (m == Method::naf) {
      if (options.model == nullptr) fail(ErrorKind::invalid_config, "evaluating naf requires a model");
      field::FieldEvaluator eval(*options.model);
      r = score_predictions(name, truth, stft, naf_predictor(eval, options.seed), options.workers);
      r.storage_bytes = options.model_bytes;
    } else {
      const bool codec = m == Method::codec_nearest || m == Method::codec_linear;
      const bool nearest = m == Method::nearest || m == Method::codec_nearest;
      const std::vector<ImpulseResponseRecord>& pool = codec ? decoded : train;
      const int k = options.linear_k;
      r = score_predictions(name, truth, stft,
                            [&pool, &stft, nearest, k](std::size_t, const ImpulseResponseRecord& gt) {
                              const ImpulseResponseRecord ir = nearest ? baselines::nearest_ir(pool, gt.pose)
                                                                       : baselines::linear_ir(pool, gt.pose, k).record;
                              return prediction_from_ir(ir, stft);
                            },
                            options.workers);
      r.storage_bytes = codec ? codec_bytes : options.dataset_bytes;
    }
    report.methods.push_back(r);
  }
  return report;
}

double naf_test_loss(const Dataset& dataset, const field::FieldModel<float>& model, int workers) {
  const auto truth = dataset.test_records();
  const field::FieldEvaluator eval(model);
  std::vector<double> loss(truth.size());
  parallel_for(truth.size(), workers, [&](std::size_t i) {
    for (int ear = 0; ear < kNumEars; ++ear) {
      const Spectrogram gt = dsp::log_spectrogram(dsp::to_double(truth[i].channels[static_cast<std::size_t>(ear)]),
                                                  dataset.manifest.stft);
      loss[i] += 0.5 * dsp::spectral_loss(field::render_spectrogram(eval, truth[i].pose, ear), gt);
    }
  });
  double total = 0.0;
  for (double l : loss) total += l;
  return truth.empty() ? 0.0 : total / static_cast<double>(truth.size());
}

}  // namespace naf::analysis
