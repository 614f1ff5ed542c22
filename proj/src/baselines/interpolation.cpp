#include "naf/baselines/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include "naf/core/error.hpp"

namespace naf::baselines {

double pose_distance(const Pose& a, const Pose& b) {
  const double d[4] = {a.emitter.x - b.emitter.x, a.emitter.y - b.emitter.y, a.listener.x - b.listener.x,
                       a.listener.y - b.listener.y};
  return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
}

namespace {

struct Candidate {
  double distance;
  std::size_t index;
};

std::vector<Candidate> candidates(std::span<const ImpulseResponseRecord> records, const Pose& query) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].pose.orientation == query.orientation) out.push_back({pose_distance(records[i].pose, query), i});
  }
  if (out.empty()) {
    fail(ErrorKind::lookup, "no training record with orientation " + std::to_string(query.orientation));
  }
  return out;
}

bool closer(const Candidate& a, const Candidate& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

}  // namespace

std::size_t nearest_index(std::span<const ImpulseResponseRecord> records, const Pose& query) {
  const auto c = candidates(records, query);
  return std::min_element(c.begin(), c.end(), closer)->index;
}

ImpulseResponseRecord nearest_ir(std::span<const ImpulseResponseRecord> records, const Pose& query) {
  return records[nearest_index(records, query)];
}

LinearResult linear_ir(std::span<const ImpulseResponseRecord> records, const Pose& query, int k) {
  if (k < 1) fail(ErrorKind::invalid_config, "linear interpolation needs k >= 1");
  auto c = candidates(records, query);
  LinearResult out;
  const auto want = static_cast<std::size_t>(k);
  out.fallback = c.size() < want;
  const std::size_t n = std::min(want, c.size());
  std::partial_sort(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n), c.end(), closer);
  c.resize(n);

  std::size_t exact = 0;
  for (const auto& cand : c) exact += cand.distance == 0.0 ? 1 : 0;
  double total = 0.0;
  for (const auto& cand : c) {
    const double w = exact > 0 ? (cand.distance == 0.0 ? 1.0 : 0.0) : 1.0 / (cand.distance + 1e-6);
    out.neighbors.push_back(cand.index);
    out.weights.push_back(w);
    total += w;
  }
  for (double& w : out.weights) w /= total;

  std::size_t length = 0;
  for (std::size_t i : out.neighbors) length = std::max(length, records[i].n_samples());
  out.record.pose = query;
  out.record.sample_rate = records[out.neighbors[0]].sample_rate;
  for (int ear = 0; ear < 2; ++ear) {
    std::vector<double> acc(length, 0.0);
    for (std::size_t j = 0; j < out.neighbors.size(); ++j) {
      if (out.weights[j] == 0.0) continue;
      const auto& ch = records[out.neighbors[j]].channels[static_cast<std::size_t>(ear)];
      for (std::size_t s = 0; s < ch.size(); ++s) acc[s] += out.weights[j] * static_cast<double>(ch[s]);
    }
    auto& dst = out.record.channels[static_cast<std::size_t>(ear)];
    dst.resize(length);
    for (std::size_t s = 0; s < length; ++s) dst[s] = static_cast<float>(acc[s]);
  }
  return out;
}

}  // namespace naf::baselines
