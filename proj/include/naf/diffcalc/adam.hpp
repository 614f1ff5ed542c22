#pragma once

#include <cstdint>
#include <vector>

#include "naf/diffcalc/tensor.hpp"

namespace naf::diffcalc {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

/// One Adam update using each parameter's `grad`. State buffers are sized on
/// the first call and must match the parameter list afterwards.
void adam_step(const std::vector<Tensor<float>*>& params, AdamState& state, double lr);

}  // namespace naf::diffcalc
