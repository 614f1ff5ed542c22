#include "naf/analysis/probe.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "naf/baselines/interpolation.hpp"
#include "naf/core/error.hpp"
#include "naf/core/parallel.hpp"
#include "naf/core/rng.hpp"
#include "naf/dsp/stft.hpp"

namespace naf::analysis {

double wall_distance(const SceneGeometry& scene, Vec2 p) {
  if (!scene.contains(p)) fail(ErrorKind::invalid_input, "wall_distance: point outside the footprint");
  double d = std::min({p.x, scene.width - p.x, p.y, scene.depth - p.y});
  for (const Segment& s : scene.occluders) d = std::min(d, point_segment_distance(p, s));
  return d;
}

std::vector<Vec2> probe_listeners(const SceneGeometry& scene, std::uint64_t seed, int count) {
  Rng rng(Rng::mix(seed ^ 0x11573e4));
  const double margin = std::min({0.25, scene.width / 4.0, scene.depth / 4.0});
  std::vector<Vec2> out;
  for (int guard = 0; static_cast<int>(out.size()) < count; ++guard) {
    if (guard > 100000) fail(ErrorKind::invalid_config, "cannot place probe listeners in this scene");
    const Vec2 p{rng.uniform(margin, scene.width - margin), rng.uniform(margin, scene.depth - margin)};
    bool clear = true;
    for (const Segment& s : scene.occluders) clear = clear && point_segment_distance(p, s) >= 0.1;
    if (clear) out.push_back(p);
  }
  return out;
}

std::vector<double> extract_latent(const field::FieldEvaluator& eval, Vec2 location, std::span<const Vec2> listeners) {
  std::vector<double> out;
  for (const Vec2& q : listeners) {
    std::vector<double> acc;
    for (int ear = 0; ear < kNumEars; ++ear) {
      const auto h = eval.mean_last_hidden(field::PoseRow{location, q, 0, ear});
      if (acc.empty()) acc.assign(h.size(), 0.0);
      for (std::size_t i = 0; i < h.size(); ++i) acc[i] += h[i] / kNumEars;
    }
    out.insert(out.end(), acc.begin(), acc.end());
  }
  return out;
}

std::vector<double> mfcc_feature(std::span<const ImpulseResponseRecord> train, Vec2 location,
                                 std::span<const Vec2> listeners, const dsp::MfccConfig& cfg) {
  std::vector<double> out;
  for (const Vec2& q : listeners) {
    const auto& ir = train[baselines::nearest_index(train, Pose{location, q, 0})];
    Array2D<double> avg;
    for (std::size_t ear = 0; ear < 2; ++ear) {
      const auto m = dsp::mfcc(dsp::to_double(ir.channels[ear]), ir.sample_rate, cfg);
      if (avg.data.empty()) avg = Array2D<double>(m.rows, m.cols, 0.0);
      for (std::size_t i = 0; i < m.data.size(); ++i) avg.data[i] += 0.5 * m.data[i];
    }
    out.insert(out.end(), avg.data.begin(), avg.data.end());
  }
  return out;
}

namespace {

// Solves the centered ridge system in whichever of the primal (d x d) or
// dual (n x n) forms is smaller. Returns false when the matrix is singular.
bool solve_ridge(const Eigen::MatrixXd& xc, const Eigen::VectorXd& yc, double lambda, Eigen::VectorXd& w) {
  const Eigen::Index n = xc.rows();
  const Eigen::Index d = xc.cols();
  Eigen::MatrixXd a = d <= n ? Eigen::MatrixXd(xc.transpose() * xc) : Eigen::MatrixXd(xc * xc.transpose());
  a.diagonal().array() += lambda;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (!qr.isInvertible()) return false;
  if (d <= n) {
    w = qr.solve(xc.transpose() * yc);
  } else {
    w = xc.transpose() * qr.solve(yc);
  }
  return w.allFinite();
}

}  // namespace

LinearProbe fit_linear_probe(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double lambda) {
  if (features.rows() < 2 || features.rows() != targets.size()) {
    fail(ErrorKind::invalid_input, "linear probe needs at least 2 rows and one target per row");
  }
  if (!features.allFinite() || !targets.allFinite()) fail(ErrorKind::invalid_input, "linear probe inputs must be finite");
  if (lambda < 0.0) fail(ErrorKind::invalid_config, "ridge lambda must be non-negative");
  const Eigen::RowVectorXd mu = features.colwise().mean();
  const double ymu = targets.mean();
  const Eigen::MatrixXd xc = features.rowwise() - mu;
  const Eigen::VectorXd yc = targets.array() - ymu;

  LinearProbe p;
  p.lambda = lambda;
  if (!solve_ridge(xc, yc, lambda, p.weights)) {
    if (lambda != 0.0) fail(ErrorKind::estimation_failure, "ridge system is singular");
    p.lambda = 1e-6;
    p.retried = true;
    if (!solve_ridge(xc, yc, p.lambda, p.weights)) fail(ErrorKind::estimation_failure, "ridge system is singular");
  }
  p.bias = ymu - mu.dot(p.weights);
  return p;
}

Eigen::VectorXd probe_predict(const LinearProbe& probe, const Eigen::MatrixXd& features) {
  return (features * probe.weights).array() + probe.bias;
}

double explained_variance(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  const Eigen::VectorXd r = y - yhat;
  const double vy = (y.array() - y.mean()).square().mean();
  const double vr = (r.array() - r.mean()).square().mean();
  if (vy == 0.0) return vr == 0.0 ? 1.0 : 0.0;
  return 1.0 - vr / vy;
}

double probe_explained_variance(const LinearProbe& probe, const Eigen::MatrixXd& features,
                                const Eigen::VectorXd& targets) {
  return explained_variance(targets, probe_predict(probe, features));
}

ProbePoints probe_points(const SceneGeometry& scene, double spacing, double train_ratio, std::uint64_t seed) {
  if (!(spacing > 0.0) || !(train_ratio > 0.0)) fail(ErrorKind::invalid_config, "probe spacing and ratio must be positive");
  ProbePoints pts;
  const auto nx = static_cast<std::size_t>(std::floor(scene.width / spacing + 1e-9));
  const auto ny = static_cast<std::size_t>(std::floor(scene.depth / spacing + 1e-9));
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      pts.test.push_back({(static_cast<double>(i) + 0.5) * spacing, (static_cast<double>(j) + 0.5) * spacing});
    }
  }
  const auto n_train = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(pts.test.size()))));
  Rng rng(Rng::mix(seed ^ 0x9120be));
  const double eps = 1e-6;
  for (std::size_t k = 0; k < n_train; ++k) {
    pts.train.push_back({rng.uniform(eps, scene.width - eps), rng.uniform(eps, scene.depth - eps)});
  }
  return pts;
}

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

template <typename Fn>
Eigen::MatrixXd features_at(const std::vector<Vec2>& points, int workers, Fn&& fn) {
  std::vector<std::vector<double>> rows(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) { rows[i] = fn(points[i]); });
  return to_matrix(rows);
}

}  // namespace

nlohmann::json ProbeResult::to_json() const {
  auto side = [](const ProbeSide& s) {
    return nlohmann::json{{"dim", s.dim}, {"explained_variance", s.explained_variance}, {"lambda", s.lambda},
                          {"lambda_retried", s.retried}};
  };
  nlohmann::json j;
  j["n_train"] = points.train.size();
  j["n_test"] = points.test.size();
  j["naf"] = side(naf);
  j["mfcc"] = side(mfcc);
  j["listeners"] = nlohmann::json::array();
  for (const auto& q : listeners) j["listeners"].push_back({q.x, q.y});
  j["latent"] = "mean over (ear, t, f) of the last hidden layer after activation, orientation 0";
  return j;
}

ProbeResult run_probe(const field::FieldEvaluator& eval, const Dataset& dataset, const ProbeConfig& cfg) {
  const SceneGeometry& scene = dataset.manifest.scene;
  ProbeResult r;
  r.points = probe_points(scene, cfg.spacing, cfg.train_ratio, cfg.seed);
  r.listeners = probe_listeners(scene, cfg.seed, cfg.n_listeners);
  const auto train = dataset.train_records();

  auto targets = [&](const std::vector<Vec2>& pts) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) y(static_cast<Eigen::Index>(i)) = wall_distance(scene, pts[i]);
    return y;
  };
  const Eigen::VectorXd y_train = targets(r.points.train);
  const Eigen::VectorXd y_test = targets(r.points.test);
  r.test_targets.assign(y_test.data(), y_test.data() + y_test.size());

  auto latent = [&](Vec2 p) { return extract_latent(eval, p, r.listeners); };
  auto mfcc = [&](Vec2 p) { return mfcc_feature(train, p, r.listeners, cfg.mfcc); };

  auto fit = [&](const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& x_test, ProbeSide& side) {
    const LinearProbe probe = fit_linear_probe(x_train, y_train, cfg.lambda);
    const Eigen::VectorXd pred = probe_predict(probe, x_test);
    side.dim = static_cast<std::size_t>(x_train.cols());
    side.lambda = probe.lambda;
    side.retried = probe.retried;
    side.explained_variance = explained_variance(y_test, pred);
    side.test_prediction.assign(pred.data(), pred.data() + pred.size());
  };
  {
    const Eigen::MatrixXd x_train = features_at(r.points.train, cfg.workers, latent);
    r.test_latents = features_at(r.points.test, cfg.workers, latent);
    fit(x_train, r.test_latents, r.naf);
  }
  fit(features_at(r.points.train, cfg.workers, mfcc), features_at(r.points.test, cfg.workers, mfcc), r.mfcc);
  return r;
}

void write_probe_csv(const ProbeResult& r, const ProbeSide& side, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::io, "cannot write " + path.string());
  os << "x,y,target,prediction\n";
  os.precision(9);
  for (std::size_t i = 0; i < r.points.test.size(); ++i) {
    os << r.points.test[i].x << ',' << r.points.test[i].y << ',' << r.test_targets[i] << ',' << side.test_prediction[i]
       << '\n';
  }
}

Pca2 pca_2d(const Eigen::MatrixXd& x) {
  if (x.rows() < 3) fail(ErrorKind::invalid_input, "PCA needs at least 3 rows");
  Pca2 p;
  p.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd xc = x.rowwise() - p.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinV);
  const Eigen::Index k = std::min<Eigen::Index>(2, svd.matrixV().cols());
  p.components = Eigen::MatrixXd::Zero(x.cols(), 2);
  p.components.leftCols(k) = svd.matrixV().leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    // Fix the sign so the largest-magnitude loading is positive.
    Eigen::Index at = 0;
    p.components.col(c).cwiseAbs().maxCoeff(&at);
    if (p.components(at, c) < 0.0) p.components.col(c) *= -1.0;
  }
  p.coords = xc * p.components;
  return p;
}

int room_label(const SceneGeometry& scene, Vec2 p) {
  if (scene.occluders.empty()) return 0;
  const Segment& s = scene.occluders.front();
  const double cross = (s.b.x - s.a.x) * (p.y - s.a.y) - (s.b.y - s.a.y) * (p.x - s.a.x);
  return cross > 0.0 ? 1 : 0;
}

void write_embedding_csv(const Pca2& pca, const std::vector<int>& labels, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::io, "cannot write " + path.string());
  os << "x,y,room_label\n";
  os.precision(9);
  for (Eigen::Index i = 0; i < pca.coords.rows(); ++i) {
    os << pca.coords(i, 0) << ',' << pca.coords(i, 1) << ','
       << (static_cast<std::size_t>(i) < labels.size() ? labels[static_cast<std::size_t>(i)] : 0) << '\n';
  }
}

}  // namespace naf::analysis
