#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "naf/diffcalc/graph.hpp"

namespace naf::diffcalc {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

/// Builds the loss on a fresh graph from the current parameter values.
using LossBuilder = std::function<Var<double>(Graph<double>&)>;

/// Compares backward() gradients with central differences at step h on
/// `samples` randomly chosen scalar parameters. The relative error is
/// |a - n| / max(|a|, |n|, 1e-8). A coordinate where the one-sided slopes
/// disagree by more than 1% of their scale sits on a piecewise-linear kink
/// and is redrawn (counted in skipped_kinks).
GradCheckResult gradcheck(const LossBuilder& build, const std::vector<Tensor<double>*>& params, double h,
                          std::size_t samples, std::uint64_t seed);

}  // namespace naf::diffcalc
