#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace naf::diffcalc {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

/// Dense row-major tensor. Parameters set requires_grad and own a gradient
/// buffer of the same size.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> values;
  bool requires_grad = false;
  std::vector<T> grad;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T{0}) : shape(std::move(s)), values(numel(shape), fill) {}
  Tensor(Shape s, std::vector<T> v);

  std::size_t size() const { return values.size(); }

  /// Sets requires_grad and allocates a zeroed gradient.
  Tensor& enable_grad() {
    requires_grad = true;
    grad.assign(values.size(), T{0});
    return *this;
  }

  void zero_grad() { grad.assign(values.size(), T{0}); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = static_cast<U>(values[i]);
    if (requires_grad) out.enable_grad();
    return out;
  }
};

extern template struct Tensor<float>;
extern template struct Tensor<double>;

}  // namespace naf::diffcalc
