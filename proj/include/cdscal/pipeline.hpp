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

// Per-chunk orchestration: cluster, drift check, query, classify, update.
// The StreamSummary is the only state carried between chunks.

#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <utility>

#include "cdscal/active.hpp"
#include "cdscal/classify.hpp"
#include "cdscal/core.hpp"
#include "cdscal/density.hpp"
#include "cdscal/drift.hpp"

namespace cdscal {

struct PipelineConfig {
  DensityConfig density;
  DriftConfig drift;
  QueryConfig query;
  std::size_t k_neighbors = 5;
  std::optional<int> stale_after;  // retire clusters untouched for this many chunks

  void validate() const {
    density.validate();
    drift.validate();
    query.validate();
    if (k_neighbors == 0) throw Error("k_neighbors must be at least 1");
    if (stale_after && *stale_after < 1) throw Error("stale_after must be at least 1");
  }
};

struct PhaseTimings {
  double density_ms = 0.0;
  double drift_ms = 0.0;
  double query_ms = 0.0;
  double classify_ms = 0.0;
  double update_ms = 0.0;
};

struct ChunkResult {
  int t = 0;
  LabeledBatch predictions;
  QueryBatch queries;
  DriftReport drift;
  std::size_t n_clusters = 0;     // |C_t| after the update
  std::size_t n_subclusters = 0;  // |SC_t| after the update
  std::size_t n_chunk_clusters = 0;
  bool oracle_failed = false;
  PhaseTimings timings;
};

/// Folds one chunk's clustering, drift decisions and predicted labels into the summary.
inline StreamSummary update_summary(StreamSummary summary, const ChunkClustering& clustering,
                                    const DriftReport& report, const LabeledBatch& predictions,
                                    std::span<const double> densities, const Chunk& chunk, int t,
                                    std::optional<int> stale_after = std::nullopt) {
  constexpr ClusterId unmapped = -1;
  std::vector<ClusterId> target(clustering.clusters.size(), unmapped);

  // Macro level: updated clusters take the densest merged chunk cluster.
  std::map<ClusterId, std::size_t> overwrite;
  for (const auto& [h, c] : report.updated) {
    target[c] = h;
    auto [it, inserted] = overwrite.try_emplace(h, c);
    if (!inserted && clustering.clusters[c].raw_density > clustering.clusters[it->second].raw_density) it->second = c;
  }
  for (const auto& [h, c] : overwrite) {
    ClusterRecord* rec = summary.find(h);
    if (!rec) throw InvariantError("update_summary: updated cluster " + std::to_string(h) + " not in summary");
    const ChunkCluster& cc = clustering.clusters[c];
    rec->center = chunk.features(cc.peak);
    rec->density = cc.density;
    rec->radius = cc.radius;
    rec->last_updated = t;
  }
  for (const auto& [h, c] : report.rejected_novel) {
    target[c] = h;
    ClusterRecord* rec = summary.find(h);
    if (!rec) throw InvariantError("update_summary: attached cluster " + std::to_string(h) + " not in summary");
    rec->last_updated = t;
  }
  for (const std::size_t c : report.novel) {
    const ChunkCluster& cc = clustering.clusters[c];
    const ClusterId id = summary.next_cluster_id++;
    target[c] = id;
    summary.clusters.push_back({id, chunk.features(cc.peak), cc.density, cc.radius, t});
  }
  for (std::size_t c = 0; c < target.size(); ++c)
    if (target[c] == unmapped) throw InvariantError("update_summary: chunk cluster " + std::to_string(c) + " not covered");

  // Micro level: densest sample per (cluster, predicted label).
  std::map<ClusterId, std::map<ClassLabel, SampleId>> candidates;
  for (SampleId id = 0; id < chunk.size(); ++id) {
    const ClusterId cid = target[clustering.assignments[id]];
    const ClassLabel& label = predictions.labels.at(id);
    auto& slot = candidates[cid];
    auto [it, inserted] = slot.try_emplace(label, id);
    if (!inserted && densities[id] > densities[it->second]) it->second = id;
  }
  for (const auto& [cid, by_label] : candidates) {
    for (const auto& [label, id] : by_label) {
      auto existing = std::find_if(summary.subclusters.begin(), summary.subclusters.end(),
                                   [&](const SubClusterRecord& s) { return s.parent_cluster_id == cid && s.label == label; });
      if (existing == summary.subclusters.end()) {
        summary.subclusters.push_back({cid, chunk.features(id), label, densities[id], t});
      } else if (densities[id] > existing->density) {
        existing->center = chunk.features(id);
        existing->density = densities[id];
        existing->last_updated = t;
      }
    }
  }

  if (stale_after) {
    std::set<ClusterId> retired;
    std::erase_if(summary.clusters, [&](const ClusterRecord& c) {
      const bool stale = t - c.last_updated >= *stale_after;
      if (stale) retired.insert(c.cluster_id);
      return stale;
    });
    std::erase_if(summary.subclusters, [&](const SubClusterRecord& s) { return retired.count(s.parent_cluster_id) > 0; });
  }
  return summary;
}

namespace detail {
class Stopwatch {
 public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};
}  // namespace detail

inline std::pair<StreamSummary, ChunkResult> process_chunk(StreamSummary summary, const Chunk& chunk, Oracle& oracle,
                                                           const PipelineConfig& config) {
  config.validate();
  std::optional<std::size_t> dim;
  if (!summary.empty()) dim = summary.clusters.front().center.size();
  validate_chunk(chunk, dim);

  ChunkResult result;
  result.t = chunk.t;
  detail::Stopwatch clock;

  const DistanceMatrix d = pairwise_distances(chunk);
  ChunkClustering clustering = merge_overlapped(extract_clusters(chunk, d, config.density), d, config.density);
  const std::vector<double>& densities = clustering.densities;
  result.n_chunk_clusters = clustering.clusters.size();
  result.timings.density_ms = clock.lap_ms();

  result.drift = summary.empty() ? DriftReport::all_novel(clustering.clusters.size())
                                 : check_merge(summary, clustering, chunk, densities, config.drift);
  result.timings.drift_ms = clock.lap_ms();

  LabeledBatch answers;
  try {
    std::tie(result.queries, answers) =
        active_query(chunk, clustering, result.drift, densities, oracle, config.query);
  } catch (const QueryAborted& e) {
    // Without prototypes there is nothing to classify with; timeouts abort the run.
    if (summary.empty() || e.timed_out()) throw;
    result.queries = QueryBatch{{}, {}, e.batch().budget};
    result.oracle_failed = true;
  }
  result.timings.query_ms = clock.lap_ms();

  const PrototypeSet prototypes = assemble_prototypes(summary, result.queries, answers, chunk);
  result.predictions = knn_propagate(prototypes, chunk, result.queries, answers, config.k_neighbors);
  result.timings.classify_ms = clock.lap_ms();

  summary = update_summary(std::move(summary), clustering, result.drift, result.predictions, densities, chunk,
                           chunk.t, config.stale_after);
  audit(summary);
  result.n_clusters = summary.clusters.size();
  result.n_subclusters = summary.subclusters.size();
  result.timings.update_ms = clock.lap_ms();
  return {std::move(summary), std::move(result)};
}

/// Owns the stream summary of one stream and feeds it chunks in order.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, StreamSummary summary = {})
      : config_(std::move(config)), summary_(std::move(summary)) {
    config_.validate();
    audit(summary_);
  }

  ChunkResult process(const Chunk& chunk, Oracle& oracle) {
    auto [next, result] = process_chunk(summary_, chunk, oracle, config_);
    summary_ = std::move(next);
    return std::move(result);
  }

  const StreamSummary& summary() const noexcept { return summary_; }
  const PipelineConfig& config() const noexcept { return config_; }

 private:
  PipelineConfig config_;
  StreamSummary summary_;
};

}  // namespace cdscal
