#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "naf/core/error.hpp"
#include "naf/core/rng.hpp"
#include "naf/diffcalc/adam.hpp"
#include "naf/diffcalc/gradcheck.hpp"
#include "naf/diffcalc/graph.hpp"

using namespace naf;
using namespace naf::diffcalc;
using doctest::Approx;

namespace {

using Builder = std::function<Var<double>(Graph<double>&, std::vector<Var<double>>&)>;

Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.values) v = rng.uniform(lo, hi);
  t.enable_grad();
  return t;
}

double evaluate(const Builder& build, std::vector<Tensor<double>*>& params) {
  Graph<double> g;
  std::vector<Var<double>> vars;
  for (auto* p : params) vars.push_back(g.parameter(*p));
  return build(g, vars).item();
}

// Central differences on every entry, compared against backward().
double max_rel_error(const Builder& build, std::vector<Tensor<double>*> params, double h = 1e-5) {
  for (auto* p : params) p->zero_grad();
  {
    Graph<double> g;
    std::vector<Var<double>> vars;
    for (auto* p : params) vars.push_back(g.parameter(*p));
    g.backward(build(g, vars));
  }
  double worst = 0.0;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->values.size(); ++i) {
      const double keep = p->values[i];
      p->values[i] = keep + h;
      const double up = evaluate(build, params);
      p->values[i] = keep - h;
      const double down = evaluate(build, params);
      p->values[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8}));
    }
  }
  return worst;
}

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("leaky relu values") {
  Graph<double> g;
  auto x = g.constant({1, 2}, {-2.0, 3.0});
  auto y = leaky_relu(x, 0.1);
  CHECK(y.value()[0] == Approx(-0.2));
  CHECK(y.value()[1] == 3.0);
}

TEST_CASE("identity matmul") {
  Graph<double> g;
  auto a = random_tensor({3, 4}, 1);
  auto eye = g.constant({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto out = matmul(eye, g.constant(a));
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(out.value()[i] == a.values[i]);
}

TEST_CASE("forward values match definitions") {
  Graph<double> g;
  auto a = g.constant({2, 2}, {1, 2, 3, 4});
  auto b = g.constant({2, 2}, {5, 6, 7, 8});
  auto row = g.constant({2}, {10, 20});
  const auto p = matmul(a, b).value();
  CHECK(std::vector<double>(p.begin(), p.end()) == std::vector<double>{19, 22, 43, 50});
  const auto s = add(a, row).value();
  CHECK(std::vector<double>(s.begin(), s.end()) == std::vector<double>{11, 22, 13, 24});
  const auto d = sub(a, b).value();
  CHECK(std::vector<double>(d.begin(), d.end()) == std::vector<double>{-4, -4, -4, -4});
  const auto m = mul(a, b).value();
  CHECK(std::vector<double>(m.begin(), m.end()) == std::vector<double>{5, 12, 21, 32});
  CHECK(sum(a).item() == 10.0);
  CHECK(mean(a).item() == 2.5);
  CHECK(mse(a, b).item() == 16.0);
  const auto c = concat<double>({a, b}).value();
  CHECK(std::vector<double>(c.begin(), c.end()) == std::vector<double>{1, 2, 5, 6, 3, 4, 7, 8});
  const auto r = gather_rows(b, {1, 1, 0}).value();
  CHECK(std::vector<double>(r.begin(), r.end()) == std::vector<double>{7, 8, 7, 8, 5, 6});
  const auto sc = scale(a, 0.5).value();
  CHECK(sc[3] == 2.0);
}

TEST_CASE("dense matches the composed ops") {
  Graph<double> g;
  auto x = g.constant(random_tensor({5, 3}, 2));
  auto w = g.constant(random_tensor({3, 4}, 3));
  auto table = g.constant(random_tensor({3, 4}, 4));
  auto extra = g.constant(random_tensor({5, 4}, 5));
  const std::vector<std::size_t> rows = {2, 0, 1, 1, 2};
  auto fused = dense(x, w, table, rows, &extra, 0.1);
  auto ref = leaky_relu(add(add(matmul(x, w), gather_rows(table, rows)), extra), 0.1);
  for (std::size_t i = 0; i < 20; ++i) CHECK(fused.value()[i] == Approx(ref.value()[i]).epsilon(1e-12));
}

TEST_CASE("simple gradients") {
  auto x = random_tensor({3, 2}, 9);
  {
    Graph<double> g;
    g.backward(sum(g.parameter(x)));
    for (double v : x.grad) CHECK(v == 1.0);
  }
  x.zero_grad();
  {
    Graph<double> g;
    auto v = g.parameter(x);
    g.backward(sum(mul(v, v)));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.grad[i] == Approx(2.0 * x.values[i]));
  }
}

TEST_CASE("mse gradient is 2(pred - target)/N") {
  auto p = random_tensor({4, 3}, 12);
  auto t = random_tensor({4, 3}, 13);
  Graph<double> g;
  g.backward(mse(g.parameter(p), g.constant(t)));
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p.grad[i] == Approx(2.0 * (p.values[i] - t.values[i]) / 12.0).epsilon(1e-12));
  }
}

TEST_CASE("gather_rows accumulates repeated rows") {
  auto table = random_tensor({3, 2}, 14);
  Graph<double> g;
  g.backward(sum(gather_rows(g.parameter(table), {0, 2, 0, 0})));
  CHECK(table.grad == std::vector<double>{3, 3, 0, 0, 1, 1});
}

TEST_CASE("leaf used twice sums contributions") {
  auto x = random_tensor({2, 2}, 15);
  Graph<double> g;
  auto v = g.parameter(x);
  g.backward(sum(add(v, scale(v, 3.0))));
  for (double d : x.grad) CHECK(d == Approx(4.0));
}

TEST_CASE("finite-difference checks per op") {
  auto a = random_tensor({4, 3}, 21);
  auto b = random_tensor({3, 5}, 22);
  auto c = random_tensor({4, 3}, 23);
  auto row = random_tensor({3}, 24);
  auto table = random_tensor({6, 5}, 25);
  auto extra = random_tensor({4, 5}, 26);
  auto target = random_tensor({4, 5}, 27);
  auto bias = random_tensor({5}, 29);
  // Keep leaky-relu inputs away from zero so central differences are smooth.
  auto away = random_tensor({4, 3}, 28, 0.2, 1.0);
  for (std::size_t i = 0; i < away.size(); i += 2) away.values[i] = -away.values[i];

  const double linear = 1e-6, smooth = 1e-4;
  CHECK(max_rel_error([](auto&, auto& v) { return sum(matmul(v[0], v[1])); }, {&a, &b}) < linear);
  CHECK(max_rel_error([](auto&, auto& v) { return sum(add(v[0], v[1])); }, {&a, &row}) < linear);
  CHECK(max_rel_error([](auto&, auto& v) { return sum(sub(v[0], v[1])); }, {&a, &c}) < linear);
  CHECK(max_rel_error([](auto&, auto& v) { return sum(scale(v[0], 1.7)); }, {&a}) < linear);
  CHECK(max_rel_error([](auto&, auto& v) { return mean(concat<double>({v[0], v[1]})); }, {&a, &c}) < linear);
  CHECK(max_rel_error([](auto&, auto& v) { return sum(gather_rows(v[0], {5, 0, 5, 2})); }, {&table}) < linear);
  CHECK(max_rel_error([](auto&, auto& v) { return sum(mul(mul(v[0], v[1]), v[0])); }, {&a, &c}) < smooth);
  CHECK(max_rel_error([](auto&, auto& v) { return sum(mul(leaky_relu(v[0], 0.1), v[0])); }, {&away}) < smooth);
  CHECK(max_rel_error([&](auto& g, auto& v) { return mse(matmul(v[0], v[1]), g.constant(target)); }, {&a, &b}) <
        smooth);
  CHECK(max_rel_error(
            [&](auto& g, auto& v) {
              auto e = v[3];
              auto h = dense(v[0], v[1], v[2], {1, 4, 4, 0}, &e, 0.1);
              return mse(h, g.constant(target));
            },
            {&a, &b, &table, &extra}) < smooth);
  CHECK(max_rel_error(
            [&](auto& g, auto& v) {
              auto h = dense<double>(v[0], v[1], v[2], {}, nullptr, 1.0);
              return mse(h, g.constant(target));
            },
            {&a, &b, &bias}) < smooth);
}

TEST_CASE("library gradcheck agrees on a small network") {
  auto x = random_tensor({6, 3}, 31);
  auto w1 = random_tensor({3, 4}, 32);
  auto w2 = random_tensor({4, 1}, 33);
  auto y = random_tensor({6, 1}, 34);
  std::vector<Tensor<double>*> params = {&w1, &w2};
  const auto r = gradcheck(
      [&](Graph<double>& g) {
        auto h = leaky_relu(matmul(g.constant(x), g.parameter(w1)), 0.1);
        return mse(matmul(h, g.parameter(w2)), g.constant(y));
      },
      params, 1e-4, 12, 3);
  CHECK(r.checked == 12);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("shape errors name the op") {
  Graph<double> g;
  auto a = g.constant({2, 3}, std::vector<double>(6, 1.0));
  auto b = g.constant({2, 3}, std::vector<double>(6, 1.0));
  CHECK(kind_of([&] { matmul(a, b); }) == ErrorKind::invalid_shape);
  try {
    matmul(a, b);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("matmul") != std::string::npos);
  }
  CHECK(kind_of([&] { mul(a, g.constant({3, 2}, std::vector<double>(6, 1.0))); }) == ErrorKind::invalid_shape);
  CHECK(kind_of([&] { concat<double>({a, g.constant({3, 1}, {1, 2, 3})}); }) == ErrorKind::invalid_shape);
  CHECK(kind_of([&] { gather_rows(a, {2}); }) == ErrorKind::invalid_shape);
  CHECK(kind_of([&] { g.backward(a); }) == ErrorKind::invalid_input);
}

TEST_CASE("adam first step") {
  Tensor<float> p({4}, 0.5f);
  p.enable_grad();
  std::fill(p.grad.begin(), p.grad.end(), 1.0f);
  AdamState s;
  adam_step({&p}, s, 1e-3);
  for (float v : p.values) CHECK(v == Approx(0.5 - 1e-3 / (1.0 + 1e-8)).epsilon(1e-6));
  CHECK(s.step == 1);
}

TEST_CASE("adam leaves parameters alone on zero gradient") {
  Tensor<float> p({3}, 0.25f);
  p.enable_grad();
  AdamState s;
  adam_step({&p}, s, 1e-3);
  for (float v : p.values) CHECK(v == 0.25f);
}

TEST_CASE("adam first step is scale invariant") {
  Tensor<float> a({1}, 0.0f), b({1}, 0.0f);
  a.enable_grad();
  b.enable_grad();
  a.grad[0] = 0.003f;
  b.grad[0] = 3.0f;
  AdamState sa, sb;
  adam_step({&a}, sa, 1e-3);
  adam_step({&b}, sb, 1e-3);
  CHECK(std::abs(b.values[0] / a.values[0] - 1.0) < 1e-3);
}

TEST_CASE("adam matches the recurrence over several steps") {
  Tensor<float> p({1}, 1.0f);
  p.enable_grad();
  AdamState s;
  double theta = 1.0, m = 0.0, v = 0.0;
  const double grads[] = {0.3, -1.2, 0.05, 2.0};
  for (int t = 1; t <= 4; ++t) {
    const double gr = grads[t - 1];
    p.grad[0] = static_cast<float>(gr);
    adam_step({&p}, s, 0.01);
    m = 0.9 * m + 0.1 * gr;
    v = 0.999 * v + 0.001 * gr * gr;
    const double mh = m / (1.0 - std::pow(0.9, t)), vh = v / (1.0 - std::pow(0.999, t));
    theta -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.values[0] == Approx(theta).epsilon(1e-5));
  }
}

TEST_CASE("float graph is deterministic") {
  auto run = [] {
    Tensor<float> x({8, 4});
    Rng rng(2);
    for (auto& v : x.values) v = static_cast<float>(rng.normal());
    Tensor<float> w({4, 3});
    for (auto& v : w.values) v = static_cast<float>(rng.normal());
    Graph<float> g;
    auto out = leaky_relu(matmul(g.constant(x), g.constant(w)), 0.1f);
    return std::vector<float>(out.value().begin(), out.value().end());
  };
  CHECK(run() == run());
}
