// Copyright 2026, The cdscal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Merge check between historical clusters and the clusters of a new chunk.
// A chunk cluster merges into a neighbouring historical cluster when the
// band of samples between their centers shows no density drop; unmerged
// clusters are novel candidates, validated against a dynamic threshold
// derived from the historical density distribution.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cdscal/core.hpp"

namespace cdscal {

struct DriftConfig {
  double rho_neighbor = 1.2;
  double epsilon_band = 0.25;
  double theta_drop = 0.5;
  std::size_t min_boundary = 3;

  void validate() const {
    if (!(rho_neighbor > 0.0)) throw Error("drift.rho_neighbor must be positive");
    if (!(epsilon_band > 0.0 && epsilon_band < 0.5)) throw Error("drift.epsilon_band must lie in (0, 0.5)");
    if (!(theta_drop > 0.0)) throw Error("drift.theta_drop must be positive");
    if (min_boundary == 0) throw Error("drift.min_boundary must be positive");
  }
};

struct NeighborPair {
  ClusterId historical = 0;
  std::size_t chunk_cluster = 0;

  bool operator==(const NeighborPair&) const = default;
};

/// Pairs (h, c) with d(Z_h, peak_c) <= rho * (R_h + R_c), in summary-major order.
inline std::vector<NeighborPair> pair_neighbors(const StreamSummary& summary, const ChunkClustering& clustering,
                                                const Chunk& chunk, const DriftConfig& config) {
  std::vector<NeighborPair> pairs;
  for (const auto& h : summary.clusters) {
    for (std::size_t c = 0; c < clustering.clusters.size(); ++c) {
      const auto& cc = clustering.clusters[c];
      const double dist = distance(h.center, chunk.features(cc.peak));
      if (dist <= config.rho_neighbor * (h.radius + cc.radius)) pairs.push_back({h.cluster_id, c});
    }
  }
  return pairs;
}

/// Samples in the band around the bisector of two centers, limited to a ball
/// around their midpoint.
inline std::vector<SampleId> boundary_samples(const Chunk& chunk, std::span<const double> center_a,
                                              std::span<const double> center_b, double radius_a, double radius_b,
                                              const DriftConfig& config) {
  const double ab = distance(center_a, center_b);
  if (ab == 0.0) throw DegenerateGeometry("boundary_samples: coincident centers");
  Features mid(center_a.size());
  for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (center_a[k] + center_b[k]);
  const double band = config.epsilon_band * ab;
  const double reach = std::max({radius_a, radius_b, ab / 2.0});

  std::vector<SampleId> out;
  for (const auto& s : chunk.samples) {
    const double da = distance(s.features, center_a);
    const double db = distance(s.features, center_b);
    if (std::abs(da - db) <= band && distance(s.features, mid) <= reach) out.push_back(s.id);
  }
  return out;
}

/// Population mean and standard deviation of the historical densities.
inline std::pair<double, double> density_moments(const StreamSummary& summary) {
  const double n = static_cast<double>(summary.clusters.size());
  double mean = 0.0;
  for (const auto& c : summary.clusters) mean += c.density;
  mean /= n;
  double var = 0.0;
  for (const auto& c : summary.clusters) var += (c.density - mean) * (c.density - mean);
  return {mean, std::sqrt(var / n)};
}

/// Novel-cluster threshold |mu - sigma|; nullopt when fewer than two historical clusters exist.
inline std::optional<double> novelty_threshold(const StreamSummary& summary) {
  if (summary.clusters.size() < 2) return std::nullopt;
  const auto [mean, sd] = density_moments(summary);
  return std::abs(mean - sd);
}

/// True when the pair shows a density drop in its boundary band.
inline bool density_drop(std::span<const SampleId> boundary, std::span<const double> densities, double peak_density,
                         const DriftConfig& config) {
  if (boundary.size() < config.min_boundary) return true;
  double sum = 0.0;
  for (const SampleId id : boundary) sum += densities[id];
  return sum / static_cast<double>(boundary.size()) < config.theta_drop * peak_density;
}

inline DriftReport check_merge(const StreamSummary& summary, const ChunkClustering& clustering, const Chunk& chunk,
                               std::span<const double> densities, const DriftConfig& config) {
  config.validate();
  const std::size_t n_clusters = clustering.clusters.size();
  const auto pairs = pair_neighbors(summary, clustering, chunk, config);

  // Nearest passing historical cluster per chunk cluster.
  struct Choice {
    ClusterId id = 0;
    double dist = std::numeric_limits<double>::infinity();
    bool set = false;
  };
  std::vector<Choice> merge_into(n_clusters);
  for (const auto& p : pairs) {
    const ClusterRecord& h = *summary.find(p.historical);
    const ChunkCluster& c = clustering.clusters[p.chunk_cluster];
    const auto& peak = chunk.features(c.peak);
    bool drop = false;
    try {
      const auto xb = boundary_samples(chunk, h.center, peak, h.radius, c.radius, config);
      drop = density_drop(xb, densities, c.density, config);
    } catch (const DegenerateGeometry&) {
      drop = false;  // coincident centers: same cluster
    }
    if (drop) continue;
    const double dist = distance(h.center, peak);
    Choice& best = merge_into[p.chunk_cluster];
    if (!best.set || dist < best.dist || (dist == best.dist && h.cluster_id < best.id)) best = {h.cluster_id, dist, true};
  }

  DriftReport report;
  const auto threshold = novelty_threshold(summary);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    if (merge_into[c].set) {
      report.updated.emplace_back(merge_into[c].id, c);
      continue;
    }
    if (!threshold || clustering.clusters[c].density >= *threshold) {
      report.novel.push_back(c);
      continue;
    }
    // Failed validation: attach to the nearest historical cluster.
    const auto& peak = chunk.features(clustering.clusters[c].peak);
    ClusterId nearest = summary.clusters.front().cluster_id;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : summary.clusters) {
      const double dist = distance(h.center, peak);
      if (dist < best || (dist == best && h.cluster_id < nearest)) {
        best = dist;
        nearest = h.cluster_id;
      }
    }
    report.rejected_novel.emplace_back(nearest, c);
  }
  return report;
}

}  // namespace cdscal
