#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "naf/core/dataset.hpp"
#include "naf/field/training.hpp"

namespace naf::analysis {

struct AblationCell {
  double fraction = 1.0;
  field::GridMode mode = field::GridMode::shared;
  std::size_t n_train = 0;
  double test_loss = 0.0;
  double final_train_loss = 0.0;
};

struct AblationTable {
  std::vector<double> fractions;
  std::vector<field::GridMode> modes;
  std::vector<AblationCell> cells;  // row-major: fraction, then mode

  const AblationCell& at(std::size_t fraction_index, std::size_t mode_index) const {
    return cells[fraction_index * modes.size() + mode_index];
  }
  nlohmann::json to_json() const;
};

/// Training records kept at `fraction`: a prefix of one seeded permutation
/// of the training split, so smaller fractions are subsets of larger ones.
std::vector<ImpulseResponseRecord> training_subset(const Dataset& dataset, double fraction, std::uint64_t seed);

/// Trains one model on the subset and scores it on the test split. Throws
/// invalid_config when the subset is smaller than one batch.
AblationCell ablation_cell(const Dataset& dataset, double fraction, field::GridMode mode,
                           const field::TrainConfig& base);

/// One cell per (fraction, mode) with the same seed everywhere.
AblationTable ablation_curve(const Dataset& dataset, const std::vector<double>& fractions,
                             const std::vector<field::GridMode>& modes, const field::TrainConfig& base);

}  // namespace naf::analysis
