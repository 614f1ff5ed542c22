#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "naf/core/types.hpp"

namespace naf::baselines {

/// Euclidean distance between (emitter, listener) pairs in R^4.
double pose_distance(const Pose& a, const Pose& b);

/// Index of the training record with the same orientation whose joint
/// position is closest to `query`; ties go to the lowest index. Throws
/// lookup when no record shares the orientation.
std::size_t nearest_index(std::span<const ImpulseResponseRecord> records, const Pose& query);

ImpulseResponseRecord nearest_ir(std::span<const ImpulseResponseRecord> records, const Pose& query);

struct LinearResult {
  ImpulseResponseRecord record;
  std::vector<std::size_t> neighbors;  // record indices, nearest first
  std::vector<double> weights;         // normalized, aligned with neighbors
  bool fallback = false;               // fewer than k candidates were available
};

/// Inverse-distance weighted average (1 / (d + 1e-6)) of the k nearest
/// same-orientation records, zero-padded to the longest. A candidate at
/// distance exactly 0 takes all the weight (shared equally with any other
/// exact matches), so training poses are reproduced exactly.
LinearResult linear_ir(std::span<const ImpulseResponseRecord> records, const Pose& query, int k = 4);

}  // namespace naf::baselines
