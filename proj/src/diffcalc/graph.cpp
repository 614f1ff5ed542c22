#include "naf/diffcalc/graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <sstream>
#include <type_traits>

#include "naf/core/error.hpp"

namespace naf::diffcalc {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape s, std::vector<T> v) : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != numel(shape)) {
    fail(ErrorKind::invalid_shape, "tensor: " + std::to_string(values.size()) + " values for shape " + shape_string(shape));
  }
}

template struct Tensor<float>;
template struct Tensor<double>;

template <typename T>
const Shape& Var<T>::shape() const {
  return graph_->shape(id_);
}

template <typename T>
std::span<const T> Var<T>::value() const {
  return graph_->value(id_);
}

template <typename T>
T Var<T>::item() const {
  const auto v = value();
  if (v.size() != 1) fail(ErrorKind::invalid_shape, "item: node has " + std::to_string(v.size()) + " elements");
  return v[0];
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  Node n;
  n.shape = std::move(value.shape);
  n.value = std::move(value.values);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::constant(Shape shape, std::vector<T> values) {
  return constant(Tensor<T>(std::move(shape), std::move(values)));
}

template <typename T>
Var<T> Graph<T>::parameter(Tensor<T>& param, std::vector<T>* grad_sink) {
  Node n;
  n.shape = param.shape;
  n.value = param.values;
  n.needs_grad = param.requires_grad;
  if (n.needs_grad) {
    if (grad_sink == nullptr) {
      if (param.grad.size() != param.values.size()) param.zero_grad();
      grad_sink = &param.grad;
    } else if (grad_sink->size() != param.values.size()) {
      grad_sink->assign(param.values.size(), T{0});
    }
    n.sink = grad_sink;
  }
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Graph<T>::record(Shape shape, std::vector<T> value, std::vector<Var<T>> parents, BackwardFn backward) {
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(value);
  for (const Var<T>& p : parents) {
    if (p.graph() != this) fail(ErrorKind::invalid_input, "op mixes nodes from different graphs");
    n.needs_grad = n.needs_grad || nodes_[p.id()].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
std::span<T> Graph<T>::grad_of(Var<T> v) {
  Node& n = nodes_[v.id()];
  if (n.sink != nullptr) return *n.sink;
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), T{0});
  return n.grad;
}

template <typename T>
void Graph<T>::backward(Var<T> loss) {
  if (loss.graph() != this) fail(ErrorKind::invalid_input, "backward: loss belongs to another graph");
  Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) {
    fail(ErrorKind::invalid_input, "backward: loss must be scalar, got shape " + shape_string(root.shape));
  }
  if (!root.needs_grad) return;
  grad_of(loss)[0] += T{1};
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || !n.backward || n.grad.empty()) continue;
    current_ = i;
    n.backward(*this, n.grad);
    // Interior gradients are not read again once propagated.
    std::vector<T>().swap(n.grad);
  }
}

template class Var<float>;
template class Var<double>;
template class Graph<float>;
template class Graph<double>;

// ---- ops -------------------------------------------------------------------

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const RowMat<T>>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;

// Leaky ReLU pieces written as integer sign masks. Activation signs are close
// to random, and GCC turns float selects into branches that mispredict about
// half the time; the mask form vectorizes. bits > 0 matches v > 0 for every
// non-NaN value.
template <typename T>
using Bits = std::conditional_t<sizeof(T) == 4, std::int32_t, std::int64_t>;

template <typename T>
void leaky_select(std::span<const T> act, std::span<const T> pos, std::span<T> out, T slope) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Bits<T> m = -static_cast<Bits<T>>(std::bit_cast<Bits<T>>(act[i]) > 0);
    const Bits<T> keep = std::bit_cast<Bits<T>>(pos[i]);
    const Bits<T> scaled = std::bit_cast<Bits<T>>(slope * pos[i]);
    out[i] = std::bit_cast<T>((keep & m) | (scaled & ~m));
  }
}

template <typename T>
void leaky_inplace(std::span<T> v, T slope) {
  leaky_select<T>(v, v, v, slope);
}

template <typename T>
void leaky_grad(std::span<const T> act, std::span<const T> go, std::span<T> out, T slope) {
  leaky_select<T>(act, go, out, slope);
}

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  fail(ErrorKind::invalid_shape, std::string(op) + ": " + detail);
}

void require_2d(const char* op, const Shape& s) {
  if (s.size() != 2) shape_error(op, "expected a 2D input, got " + shape_string(s));
}

template <typename T>
Graph<T>& same_graph(const char* op, Var<T> a, Var<T> b) {
  if (a.graph() == nullptr || a.graph() != b.graph()) shape_error(op, "operands belong to different graphs");
  return *a.graph();
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph("matmul", a, b);
  require_2d("matmul", a.shape());
  require_2d("matmul", b.shape());
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) shape_error("matmul", shape_string(a.shape()) + " x " + shape_string(b.shape()));
  std::vector<T> out(n * m);
  const auto ia = static_cast<Eigen::Index>(n), ik = static_cast<Eigen::Index>(k), im = static_cast<Eigen::Index>(m);
  Map<T>(out.data(), ia, im).noalias() = MapC<T>(a.value().data(), ia, ik) * MapC<T>(b.value().data(), ik, im);
  return g.record({n, m}, std::move(out), {a, b}, [a, b, ia, ik, im](Graph<T>& g, std::span<const T> go) {
    MapC<T> G(go.data(), ia, im);
    if (g.needs_grad(a)) {
      Map<T>(g.grad_of(a).data(), ia, ik).noalias() += G * MapC<T>(b.value().data(), ik, im).transpose();
    }
    if (g.needs_grad(b)) {
      Map<T>(g.grad_of(b).data(), ik, im).noalias() += MapC<T>(a.value().data(), ia, ik).transpose() * G;
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph("add", a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const auto va = a.value();
  const auto vb = b.value();
  if (sa == sb) {
    std::vector<T> out(va.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
    return g.record(sa, std::move(out), {a, b}, [a, b](Graph<T>& g, std::span<const T> go) {
      for (Var<T> p : {a, b}) {
        if (!g.needs_grad(p)) continue;
        auto gp = g.grad_of(p);
        for (std::size_t i = 0; i < go.size(); ++i) gp[i] += go[i];
      }
    });
  }
  const bool row_vector = (sb.size() == 1) || (sb.size() == 2 && sb[0] == 1);
  if (sa.size() != 2 || !row_vector || vb.size() != sa[1]) {
    shape_error("add", shape_string(sa) + " + " + shape_string(sb));
  }
  const std::size_t rows = sa[0], cols = sa[1];
  std::vector<T> out(va.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = va[r * cols + c] + vb[c];
  }
  return g.record(sa, std::move(out), {a, b}, [a, b, rows, cols](Graph<T>& g, std::span<const T> go) {
    if (g.needs_grad(a)) {
      auto ga = g.grad_of(a);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (g.needs_grad(b)) {
      std::vector<double> acc(cols, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) acc[c] += go[r * cols + c];
      }
      auto gb = g.grad_of(b);
      for (std::size_t c = 0; c < cols; ++c) gb[c] += static_cast<T>(acc[c]);
    }
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  if (a.shape() != b.shape()) shape_error("sub", shape_string(a.shape()) + " - " + shape_string(b.shape()));
  return add(a, scale(b, T{-1}));
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph("mul", a, b);
  if (a.shape() != b.shape()) shape_error("mul", shape_string(a.shape()) + " * " + shape_string(b.shape()));
  const auto va = a.value();
  const auto vb = b.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  return g.record(a.shape(), std::move(out), {a, b}, [a, b](Graph<T>& g, std::span<const T> go) {
    const auto va = a.value();
    const auto vb = b.value();
    if (g.needs_grad(a)) {
      auto ga = g.grad_of(a);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * vb[i];
    }
    if (g.needs_grad(b)) {
      auto gb = g.grad_of(b);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * va[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Graph<T>& g = *a.graph();
  const auto va = a.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * factor;
  return g.record(a.shape(), std::move(out), {a}, [a, factor](Graph<T>& g, std::span<const T> go) {
    auto ga = g.grad_of(a);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * factor;
  });
}

template <typename T>
Var<T> leaky_relu(Var<T> a, T slope) {
  Graph<T>& g = *a.graph();
  const auto va = a.value();
  std::vector<T> out(va.size());
  std::copy(va.begin(), va.end(), out.begin());
  leaky_inplace<T>(out, slope);
  return g.record(a.shape(), std::move(out), {a}, [a, slope](Graph<T>& g, std::span<const T> go) {
    const auto va = a.value();
    auto ga = g.grad_of(a);
    std::vector<T> d(go.size());
    leaky_grad<T>(va, go, d, slope);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += d[i];
  });
}

template <typename T>
Var<T> gather_rows(Var<T> table, std::vector<std::size_t> indices) {
  Graph<T>& g = *table.graph();
  require_2d("gather_rows", table.shape());
  const std::size_t rows = table.shape()[0], cols = table.shape()[1];
  const auto vt = table.value();
  std::vector<T> out(indices.size() * cols);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows) {
      shape_error("gather_rows", "index " + std::to_string(indices[r]) + " out of range for " + shape_string(table.shape()));
    }
    std::copy_n(vt.begin() + static_cast<std::ptrdiff_t>(indices[r] * cols), cols, out.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  const std::size_t n = indices.size();
  return g.record({n, cols}, std::move(out), {table},
                  [table, cols, idx = std::move(indices)](Graph<T>& g, std::span<const T> go) {
                    auto gt = g.grad_of(table);
                    for (std::size_t r = 0; r < idx.size(); ++r) {
                      T* dst = gt.data() + idx[r] * cols;
                      const T* src = go.data() + r * cols;
                      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                    }
                  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts) {
  if (parts.empty()) shape_error("concat", "no inputs");
  Graph<T>& g = *parts.front().graph();
  const std::size_t rows = parts.front().shape().at(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var<T>& p : parts) {
    require_2d("concat", p.shape());
    if (p.graph() != &g) shape_error("concat", "operands belong to different graphs");
    if (p.shape()[0] != rows) shape_error("concat", "row counts differ");
    widths.push_back(p.shape()[1]);
    total += p.shape()[1];
  }
  std::vector<T> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].value();
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * w), w, out.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    }
    offset += w;
  }
  return g.record({rows, total}, std::move(out), parts,
                  [parts, widths, rows, total](Graph<T>& g, std::span<const T> go) {
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < parts.size(); ++k) {
                      const std::size_t w = widths[k];
                      if (g.needs_grad(parts[k])) {
                        auto gp = g.grad_of(parts[k]);
                        for (std::size_t r = 0; r < rows; ++r) {
                          for (std::size_t c = 0; c < w; ++c) gp[r * w + c] += go[r * total + offset + c];
                        }
                      }
                      offset += w;
                    }
                  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  Graph<T>& g = *a.graph();
  double acc = 0.0;
  for (T v : a.value()) acc += static_cast<double>(v);
  return g.record({}, {static_cast<T>(acc)}, {a}, [a](Graph<T>& g, std::span<const T> go) {
    auto ga = g.grad_of(a);
    for (T& v : ga) v += go[0];
  });
}

template <typename T>
Var<T> mean(Var<T> a) {
  const std::size_t n = a.value().size();
  if (n == 0) shape_error("mean", "empty input");
  Graph<T>& g = *a.graph();
  double acc = 0.0;
  for (T v : a.value()) acc += static_cast<double>(v);
  return g.record({}, {static_cast<T>(acc / static_cast<double>(n))}, {a}, [a, n](Graph<T>& g, std::span<const T> go) {
    const T d = go[0] / static_cast<T>(n);
    for (T& v : g.grad_of(a)) v += d;
  });
}

template <typename T>
Var<T> mse(Var<T> pred, Var<T> target) {
  Graph<T>& g = same_graph("mse", pred, target);
  if (pred.value().size() != target.value().size()) {
    shape_error("mse", shape_string(pred.shape()) + " vs " + shape_string(target.shape()));
  }
  const std::size_t n = pred.value().size();
  if (n == 0) shape_error("mse", "empty input");
  const auto p = pred.value();
  const auto t = target.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    acc += d * d;
  }
  return g.record({}, {static_cast<T>(acc / static_cast<double>(n))}, {pred, target},
                  [pred, target, n](Graph<T>& g, std::span<const T> go) {
                    const auto p = pred.value();
                    const auto t = target.value();
                    const T k = T{2} * go[0] / static_cast<T>(n);
                    if (g.needs_grad(pred)) {
                      auto gp = g.grad_of(pred);
                      for (std::size_t i = 0; i < n; ++i) gp[i] += k * (p[i] - t[i]);
                    }
                    if (g.needs_grad(target)) {
                      auto gt = g.grad_of(target);
                      for (std::size_t i = 0; i < n; ++i) gt[i] -= k * (p[i] - t[i]);
                    }
                  });
}

template <typename T>
Var<T> dense(Var<T> x, Var<T> w, Var<T> table, std::vector<std::size_t> rows, const Var<T>* extra, T slope) {
  Graph<T>& g = same_graph("dense", x, w);
  same_graph("dense", x, table);
  require_2d("dense", x.shape());
  require_2d("dense", w.shape());
  const Shape& ts = table.shape();
  if (ts.size() != 1 && ts.size() != 2) shape_error("dense", "table must be 1D or 2D, got " + shape_string(ts));
  const std::size_t n = x.shape()[0], k = x.shape()[1], m = w.shape()[1];
  const std::size_t p = ts.size() == 1 ? 1 : ts[0];
  const std::size_t table_cols = ts.back();
  if (w.shape()[0] != k || table_cols != m) {
    shape_error("dense", shape_string(x.shape()) + " x " + shape_string(w.shape()) + " + " + shape_string(table.shape()));
  }
  if (!rows.empty() && rows.size() != n) shape_error("dense", "row index count differs from the input rows");
  for (std::size_t r : rows) {
    if (r >= p) shape_error("dense", "table row " + std::to_string(r) + " out of range");
  }
  if (extra != nullptr) {
    same_graph("dense", x, *extra);
    if (extra->shape() != Shape{n, m}) shape_error("dense", "extra term has shape " + shape_string(extra->shape()));
  }
  if (!(slope > T{0})) shape_error("dense", "slope must be positive");

  const auto in = static_cast<Eigen::Index>(n), ik = static_cast<Eigen::Index>(k), im = static_cast<Eigen::Index>(m);
  std::vector<T> out(n * m);
  Map<T> h(out.data(), in, im);
  h.noalias() = MapC<T>(x.value().data(), in, ik) * MapC<T>(w.value().data(), ik, im);
  const T* tab = table.value().data();
  const T* ex = extra != nullptr ? extra->value().data() : nullptr;
  for (std::size_t r = 0; r < n; ++r) {
    T* row = out.data() + r * m;
    const T* t = tab + (rows.empty() ? 0 : rows[r]) * m;
    if (ex != nullptr) {
      const T* e = ex + r * m;
      for (std::size_t c = 0; c < m; ++c) row[c] += t[c] + e[c];
    } else {
      for (std::size_t c = 0; c < m; ++c) row[c] += t[c];
    }
  }
  leaky_inplace<T>(out, slope);
  std::vector<Var<T>> parents = {x, w, table};
  if (extra != nullptr) parents.push_back(*extra);
  const Var<T> extra_var = extra != nullptr ? *extra : Var<T>{};
  const bool has_extra = extra != nullptr;
  return g.record({n, m}, std::move(out), parents,
                  [x, w, table, extra_var, has_extra, rows = std::move(rows), in, ik, im, slope](
                      Graph<T>& g, std::span<const T> go) {
                    // Output and pre-activation share their sign because slope > 0.
                    const auto a = g.output();
                    RowMat<T> gh(in, im);
                    T* ghp = gh.data();
                    leaky_grad<T>(a, go, std::span<T>(ghp, go.size()), slope);
                    if (g.needs_grad(x)) {
                      Map<T>(g.grad_of(x).data(), in, ik).noalias() += gh * MapC<T>(w.value().data(), ik, im).transpose();
                    }
                    if (g.needs_grad(w)) {
                      Map<T>(g.grad_of(w).data(), ik, im).noalias() += MapC<T>(x.value().data(), in, ik).transpose() * gh;
                    }
                    const std::size_t m = static_cast<std::size_t>(im);
                    if (g.needs_grad(table)) {
                      auto gt = g.grad_of(table);
                      for (std::size_t r = 0; r < static_cast<std::size_t>(in); ++r) {
                        T* dst = gt.data() + (rows.empty() ? 0 : rows[r]) * m;
                        const T* src = ghp + r * m;
                        for (std::size_t c = 0; c < m; ++c) dst[c] += src[c];
                      }
                    }
                    if (has_extra && g.needs_grad(extra_var)) {
                      auto ge = g.grad_of(extra_var);
                      for (std::size_t i = 0; i < ge.size(); ++i) ge[i] += ghp[i];
                    }
                  });
}

#define NAF_INSTANTIATE_OPS(T)                                                  \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                    \
  template Var<T> add<T>(Var<T>, Var<T>);                                       \
  template Var<T> sub<T>(Var<T>, Var<T>);                                       \
  template Var<T> mul<T>(Var<T>, Var<T>);                                       \
  template Var<T> scale<T>(Var<T>, T);                                          \
  template Var<T> leaky_relu<T>(Var<T>, T);                                     \
  template Var<T> gather_rows<T>(Var<T>, std::vector<std::size_t>);             \
  template Var<T> concat<T>(const std::vector<Var<T>>&);                        \
  template Var<T> sum<T>(Var<T>);                                               \
  template Var<T> mean<T>(Var<T>);                                              \
  template Var<T> mse<T>(Var<T>, Var<T>);                                       \
  template Var<T> dense<T>(Var<T>, Var<T>, Var<T>, std::vector<std::size_t>, const Var<T>*, T);

NAF_INSTANTIATE_OPS(float)
NAF_INSTANTIATE_OPS(double)

#undef NAF_INSTANTIATE_OPS

}  // namespace naf::diffcalc
