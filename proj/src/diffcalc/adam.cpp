#include "naf/diffcalc/adam.hpp"

#include <cmath>

#include "naf/core/error.hpp"

namespace naf::diffcalc {

void adam_step(const std::vector<Tensor<float>*>& params, AdamState& state, double lr) {
  if (state.m.empty()) {
    for (const Tensor<float>* p : params) {
      state.m.emplace_back(p->size(), 0.0f);
      state.v.emplace_back(p->size(), 0.0f);
    }
  }
  if (state.m.size() != params.size()) fail(ErrorKind::invalid_shape, "adam_step: parameter list changed");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<float>(state.beta1);
  const auto b2 = static_cast<float>(state.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<float>& p = *params[k];
    if (state.m[k].size() != p.size() || p.grad.size() != p.size()) {
      fail(ErrorKind::invalid_shape, "adam_step: state or gradient size mismatch");
    }
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const float g = p.grad[i];
      m[i] = b1 * m[i] + (1.0f - b1) * g;
      v[i] = b2 * v[i] + (1.0f - b2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p.values[i] -= static_cast<float>(lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

}  // namespace naf::diffcalc
