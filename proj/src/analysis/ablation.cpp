#include "naf/analysis/ablation.hpp"

#include <cmath>

#include "naf/analysis/evaluate.hpp"
#include "naf/core/error.hpp"
#include "naf/core/rng.hpp"

namespace naf::analysis {

nlohmann::json AblationTable::to_json() const {
  nlohmann::json j;
  j["fractions"] = fractions;
  std::vector<std::string> names;
  for (auto m : modes) names.push_back(m == field::GridMode::none ? "none" : "grid:" + field::to_string(m));
  j["modes"] = names;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    j["cells"].push_back({{"fraction", c.fraction},
                          {"mode", field::to_string(c.mode)},
                          {"n_train", c.n_train},
                          {"test_spectral_loss", c.test_loss},
                          {"final_train_loss", c.final_train_loss}});
  }
  return j;
}

std::vector<ImpulseResponseRecord> training_subset(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) fail(ErrorKind::invalid_config, "training fraction must lie in (0, 1]");
  std::vector<std::size_t> idx = dataset.manifest.train_indices;
  Rng rng(Rng::mix(seed ^ 0xab1a7e));
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return dataset.subset(idx);
}

AblationCell ablation_cell(const Dataset& dataset, double fraction, field::GridMode mode,
                           const field::TrainConfig& base) {
  const auto subset = training_subset(dataset, fraction, base.seed);
  if (subset.size() < static_cast<std::size_t>(base.irs_per_batch)) {
    fail(ErrorKind::invalid_config, "fraction " + std::to_string(fraction) + " leaves " +
                                        std::to_string(subset.size()) + " training records, fewer than one batch");
  }
  field::TrainConfig cfg = base;
  cfg.model.grid_mode = mode;
  const auto result = field::train(subset, dataset.manifest.scene, dataset.manifest.stft, cfg);
  AblationCell cell;
  cell.fraction = fraction;
  cell.mode = mode;
  cell.n_train = subset.size();
  cell.test_loss = naf_test_loss(dataset, result.model, base.workers);
  cell.final_train_loss = result.epoch_loss.back();
  return cell;
}

AblationTable ablation_curve(const Dataset& dataset, const std::vector<double>& fractions,
                             const std::vector<field::GridMode>& modes, const field::TrainConfig& base) {
  AblationTable table;
  table.fractions = fractions;
  table.modes = modes;
  // Check every fraction before spending time on training.
  for (double f : fractions) {
    const auto n = training_subset(dataset, f, base.seed).size();
    if (n < static_cast<std::size_t>(base.irs_per_batch)) {
      fail(ErrorKind::invalid_config, "fraction " + std::to_string(f) + " yields fewer than one batch");
    }
  }
  for (double f : fractions) {
    for (auto m : modes) table.cells.push_back(ablation_cell(dataset, f, m, base));
  }
  return table;
}

}  // namespace naf::analysis
