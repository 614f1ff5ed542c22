#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "naf/analysis/ablation.hpp"
#include "naf/analysis/evaluate.hpp"
#include "naf/analysis/probe.hpp"
#include "naf/core/error.hpp"
#include "naf/dsp/stft.hpp"
#include "naf/roomsim/roomsim.hpp"

using namespace naf;
using namespace naf::analysis;
using doctest::Approx;

namespace {

SceneGeometry box(double w, double d) {
  SceneGeometry s;
  s.width = w;
  s.depth = d;
  s.height = 2.5;
  s.absorption.fill(0.3);
  return s;
}

Dataset small_dataset() {
  roomsim::DatasetConfig cfg;
  cfg.probe_spacing = 1.0;
  cfg.max_order = 2;
  cfg.ir_duration = 0.1;
  cfg.subsample = 0.1;
  cfg.seed = 3;
  return roomsim::build_dataset(box(5.0, 4.0), cfg);
}

}  // namespace

TEST_CASE("wall distance") {
  const auto s = box(5.0, 4.0);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vec2 p{rng.uniform(0.01, 4.99), rng.uniform(0.01, 3.99)};
    CHECK(wall_distance(s, p) == Approx(std::min({p.x, 5.0 - p.x, p.y, 4.0 - p.y})));
  }
  const auto two = roomsim::bundled_scene("two_room_a");
  CHECK(wall_distance(two, {2.2, 0.5}) == Approx(0.3));
  CHECK(wall_distance(two, {2.5, 1.5}) == Approx(0.5));  // middle of the doorway
  try {
    wall_distance(s, {6.0, 1.0});
    FAIL("expected invalid_input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
  }
}

TEST_CASE("probe listeners keep their distance") {
  const auto two = roomsim::bundled_scene("two_room_a");
  const auto ls = probe_listeners(two, 4, 20);
  CHECK(ls.size() == 20);
  for (const Vec2& p : ls) {
    CHECK(std::min({p.x, two.width - p.x, p.y, two.depth - p.y}) >= 0.25);
    for (const auto& o : two.occluders) CHECK(point_segment_distance(p, o) >= 0.1);
  }
  CHECK(probe_listeners(two, 4, 20) == ls);
}

TEST_CASE("probe point lattice") {
  const auto pts = probe_points(box(5.0, 3.0), 0.5, 0.1, 2);
  CHECK(pts.test.size() == 60);
  CHECK(pts.train.size() == 6);
  CHECK(pts.test.front().x == Approx(0.25));
  CHECK(pts.test.back().y == Approx(2.75));
  for (const Vec2& p : pts.train) CHECK(box(5.0, 3.0).contains(p));
  CHECK_THROWS_AS(probe_points(box(5.0, 3.0), 0.0, 0.1, 2), Error);
}

TEST_CASE("ridge probe matches the closed form") {
  Rng rng(5);
  const int n = 40, d = 6;
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    y(i) = 0.5 + x(i, 0) - 2.0 * x(i, 3) + 0.1 * rng.normal();
  }
  for (double lambda : {0.0, 0.5, 10.0}) {
    CAPTURE(lambda);
    const auto p = fit_linear_probe(x, y, lambda);
    // Oracle: centered normal equations, bias from the means.
    const Eigen::RowVectorXd mx = x.colwise().mean();
    const double my = y.mean();
    const Eigen::MatrixXd xc = x.rowwise() - mx;
    const Eigen::VectorXd yc = y.array() - my;
    const Eigen::MatrixXd a = xc.transpose() * xc + lambda * Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd w = a.ldlt().solve(xc.transpose() * yc);
    const double b = my - mx.dot(w);
    CHECK((p.weights - w).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(p.bias == Approx(b).epsilon(1e-9));
    CHECK_FALSE(p.retried);
  }
  const auto p0 = fit_linear_probe(x, y, 0.0);
  CHECK(probe_explained_variance(p0, x, y) > 0.99);
}

TEST_CASE("singular probe retries with a small ridge") {
  Eigen::MatrixXd x(10, 3);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2.0 * i;
    x(i, 2) = 1.0;
    y(i) = 3.0 * i;
  }
  const auto p = fit_linear_probe(x, y, 0.0);
  CHECK(p.retried);
  CHECK(p.lambda == 1e-6);
  CHECK(probe_explained_variance(p, x, y) == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("explained variance") {
  Eigen::VectorXd y(4), same(4), mean(4), shifted(4);
  y << 1, 2, 3, 4;
  same = y;
  mean.setConstant(2.5);
  shifted = y.array() + 1.0;
  CHECK(explained_variance(y, same) == Approx(1.0));
  CHECK(explained_variance(y, mean) == Approx(0.0));
  // Constant offsets do not count against the variance of the residual.
  CHECK(explained_variance(y, shifted) == Approx(1.0));
}

TEST_CASE("two-component PCA") {
  Rng rng(6);
  const int n = 200;
  Eigen::MatrixXd x(n, 5);
  for (int i = 0; i < n; ++i) {
    const double a = 3.0 * rng.normal(), b = rng.normal();
    x.row(i) << a, b, a + 1.0, 0.01 * rng.normal(), -b;
  }
  const auto p = pca_2d(x);
  CHECK(p.components.rows() == 5);
  CHECK(p.coords.rows() == n);
  const Eigen::Matrix2d gram = p.components.transpose() * p.components;
  CHECK((gram - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  // Leading direction is (1, 0, 1, 0, 0) / sqrt(2) up to sign.
  CHECK(std::abs(p.components(0, 0)) == Approx(std::sqrt(0.5)).epsilon(1e-2));
  CHECK(std::abs(p.components(2, 0)) == Approx(std::sqrt(0.5)).epsilon(1e-2));
  const double v0 = p.coords.col(0).squaredNorm(), v1 = p.coords.col(1).squaredNorm();
  CHECK(v0 > v1);
  CHECK_THROWS_AS(pca_2d(x.topRows(2)), Error);
}

TEST_CASE("room labels split the two-room scene") {
  const auto two = roomsim::bundled_scene("two_room_a");
  CHECK(room_label(two, {1.0, 1.5}) != room_label(two, {4.0, 1.5}));
  CHECK(room_label(two, {1.0, 0.2}) == room_label(two, {2.0, 2.8}));
  CHECK(room_label(box(5, 4), {1.0, 1.0}) == 0);
}

TEST_CASE("method names") {
  const auto m = parse_methods("naf,codec,linear");
  REQUIRE(m.size() == 4);
  CHECK(m[1] == Method::codec_nearest);
  CHECK(m[2] == Method::codec_linear);
  CHECK(to_string(Method::codec_linear) == "codec+linear");
  try {
    parse_methods("naf,wavelet");
    FAIL("expected usage");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::usage);
  }
}

TEST_CASE("scoring a perfect predictor gives zero error") {
  const auto ds = small_dataset();
  const auto truth = ds.test_records();
  REQUIRE_FALSE(truth.empty());
  const auto r = score_predictions("oracle", truth, ds.manifest.stft,
                                   [&](std::size_t i, const ImpulseResponseRecord&) {
                                     return prediction_from_ir(truth[i], ds.manifest.stft);
                                   },
                                   2);
  CHECK(r.n_records == truth.size());
  CHECK(r.spectral_loss == 0.0);
  CHECK(r.t60_error_pct == 0.0);
  CHECK(r.t60_valid + r.t60_failures == 2 * truth.size());
}

TEST_CASE("interpolation baselines are exact on the training split") {
  const auto ds = small_dataset();
  EvalOptions opt;
  opt.methods = parse_methods("nearest,linear,codec");
  opt.test_split = false;
  opt.codec_bits = 16;
  const auto rep = evaluate(ds, opt);
  CHECK(rep.split == "train");
  CHECK(rep.at("nearest").spectral_loss == 0.0);
  CHECK(rep.at("linear").spectral_loss == 0.0);
  CHECK(rep.at("codec+nearest").spectral_loss > 0.0);
  CHECK(rep.at("codec+nearest").spectral_loss < 0.05);
  CHECK(rep.to_json()["methods"].size() == 4);
  CHECK_THROWS_AS(rep.at("naf"), Error);

  opt.test_split = true;
  const auto test = evaluate(ds, opt);
  CHECK(test.at("nearest").n_records == ds.manifest.test_indices.size());
  CHECK(test.at("nearest").spectral_loss > 0.0);

  opt.methods = {Method::naf};
  try {
    evaluate(ds, opt);
    FAIL("expected invalid_config");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_config);
  }
}

TEST_CASE("training subsets are nested") {
  const auto ds = small_dataset();
  const auto all = training_subset(ds, 1.0, 3);
  const auto half = training_subset(ds, 0.5, 3);
  const auto tenth = training_subset(ds, 0.1, 3);
  CHECK(all.size() == ds.manifest.train_indices.size());
  CHECK(half.size() == static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(all.size()))));
  auto inside = [](const ImpulseResponseRecord& r, const std::vector<ImpulseResponseRecord>& set) {
    return std::any_of(set.begin(), set.end(), [&](const auto& o) { return o.pose == r.pose; });
  };
  for (const auto& r : tenth) CHECK(inside(r, half));
  for (const auto& r : half) CHECK(inside(r, all));
  CHECK_THROWS_AS(training_subset(ds, 0.0, 3), Error);
  CHECK_THROWS_AS(training_subset(ds, 1.5, 3), Error);
}

TEST_CASE("ablation table layout") {
  const auto ds = small_dataset();
  field::TrainConfig base;
  base.model.layers = 2;
  base.model.width = 8;
  base.model.grid_dim = 2;
  base.model.grid_spacing = 1.0;
  base.epochs = 2;
  base.irs_per_batch = 4;
  base.coords_per_ir = 50;
  const auto t = ablation_curve(ds, {0.5, 1.0}, {field::GridMode::shared, field::GridMode::none}, base);
  REQUIRE(t.cells.size() == 4);
  CHECK(t.at(0, 1).mode == field::GridMode::none);
  CHECK(t.at(1, 0).fraction == 1.0);
  CHECK(t.at(0, 0).n_train < t.at(1, 0).n_train);
  for (const auto& c : t.cells) CHECK(std::isfinite(c.test_loss));
  CHECK(t.to_json()["cells"].size() == 4);
  base.irs_per_batch = 500;
  CHECK_THROWS_AS(ablation_cell(ds, 0.1, field::GridMode::shared, base), Error);
}
