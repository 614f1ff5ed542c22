#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "naf/core/dataset.hpp"
#include "naf/dsp/mfcc.hpp"
#include "naf/field/inference.hpp"

namespace naf::analysis {

/// Distance to the nearest exterior wall or occluder segment. Throws
/// invalid_input outside the footprint.
double wall_distance(const SceneGeometry& scene, Vec2 p);

/// `count` listener positions drawn once per scene, at least 0.25 m from
/// the exterior walls and 0.1 m from occluders.
std::vector<Vec2> probe_listeners(const SceneGeometry& scene, std::uint64_t seed, int count = 5);

/// Mean last-hidden activation over every (ear, t, f) with the emitter at
/// `location`, each listener in turn and orientation 0; concatenated over
/// listeners (length listeners.size() * width).
std::vector<double> extract_latent(const field::FieldEvaluator& eval, Vec2 location, std::span<const Vec2> listeners);

/// MFCCs of the nearest training IR for (emitter = location, listener = q,
/// orientation 0), averaged over the ears and flattened coefficient-major,
/// concatenated over listeners.
std::vector<double> mfcc_feature(std::span<const ImpulseResponseRecord> train, Vec2 location,
                                 std::span<const Vec2> listeners, const dsp::MfccConfig& cfg = {});

struct LinearProbe {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double lambda = 0.0;  // ridge actually used
  bool retried = false; // the requested lambda gave a singular system
};

/// Ridge least squares with an unpenalized bias. A singular system at
/// lambda = 0 is retried with lambda = 1e-6 and flagged.
LinearProbe fit_linear_probe(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, double lambda);

Eigen::VectorXd probe_predict(const LinearProbe& probe, const Eigen::MatrixXd& features);

/// 1 - Var(y - yhat) / Var(y).
double explained_variance(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

double probe_explained_variance(const LinearProbe& probe, const Eigen::MatrixXd& features,
                                const Eigen::VectorXd& targets);

struct ProbePoints {
  std::vector<Vec2> train;
  std::vector<Vec2> test;
};

/// Test points on a lattice of the given spacing (cell centers); training
/// points drawn uniformly in the footprint, train_ratio as many.
ProbePoints probe_points(const SceneGeometry& scene, double spacing, double train_ratio, std::uint64_t seed);

struct ProbeConfig {
  double spacing = 0.1;
  double train_ratio = 0.1;
  double lambda = 1e-4;
  int n_listeners = 5;
  std::uint64_t seed = 0;
  dsp::MfccConfig mfcc;
  int workers = 1;
};

struct ProbeSide {
  std::size_t dim = 0;
  double explained_variance = 0.0;
  double lambda = 0.0;
  bool retried = false;
  std::vector<double> test_prediction;
};

struct ProbeResult {
  ProbePoints points;
  std::vector<Vec2> listeners;
  std::vector<double> test_targets;
  ProbeSide naf;
  ProbeSide mfcc;
  Eigen::MatrixXd test_latents;  // NAF features at the test points

  nlohmann::json to_json() const;
};

/// Wall-distance probing of NAF latents against the MFCC baseline.
ProbeResult run_probe(const field::FieldEvaluator& eval, const Dataset& dataset, const ProbeConfig& cfg);

/// CSV x,y,target,prediction for one probe side.
void write_probe_csv(const ProbeResult& r, const ProbeSide& side, const std::filesystem::path& path);

struct Pca2 {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // d x 2, orthonormal columns
  Eigen::MatrixXd coords;      // n x 2
};

/// Top two principal components (needs at least 3 rows).
Pca2 pca_2d(const Eigen::MatrixXd& x);

/// 0 or 1 by side of the first occluder's supporting line; 0 for a scene
/// without occluders.
int room_label(const SceneGeometry& scene, Vec2 p);

/// CSV x,y,room_label of the 2D embedding.
void write_embedding_csv(const Pca2& pca, const std::vector<int>& labels, const std::filesystem::path& path);

}  // namespace naf::analysis
