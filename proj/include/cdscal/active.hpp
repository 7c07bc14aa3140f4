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

// Budgeted hybrid label querying: representative sampling inside novel
// clusters, radius-normalized distance sampling inside updated clusters.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cdscal/core.hpp"

namespace cdscal {

struct QueryConfig {
  double beta_budget = 0.10;

  void validate() const {
    if (!(beta_budget > 0.0 && beta_budget <= 1.0)) throw Error("query.beta_budget must lie in (0, 1]");
  }
};

/// What an oracle sees for one query round.
struct QueryRequest {
  int t = 0;
  const Chunk& chunk;
  const QueryBatch& batch;
  std::span<const std::size_t> assignments;  // sample id -> chunk cluster index
};

/// Label source. Must return a non-empty label for exactly the queried ids.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual LabeledBatch label(const QueryRequest& request) = 0;
};

/// Raised when the oracle fails to answer. Carries the unanswered batch.
class QueryAborted : public Error {
 public:
  QueryAborted(const std::string& what, QueryBatch batch, bool timed_out = false)
      : Error(what), batch_(std::move(batch)), timed_out_(timed_out) {}

  const QueryBatch& batch() const noexcept { return batch_; }
  bool timed_out() const noexcept { return timed_out_; }

 private:
  QueryBatch batch_;
  bool timed_out_;
};

struct KindPartition {
  std::vector<SampleId> novel;    // X_no
  std::vector<SampleId> updated;  // X_up
};

inline KindPartition partition_by_cluster_kind(const Chunk& chunk, const ChunkClustering& clustering,
                                               const DriftReport& report) {
  std::vector<bool> is_novel(clustering.clusters.size(), false);
  for (const std::size_t c : report.novel) is_novel.at(c) = true;
  KindPartition out;
  for (SampleId id = 0; id < chunk.size(); ++id)
    (is_novel[clustering.assignments[id]] ? out.novel : out.updated).push_back(id);
  return out;
}

struct BudgetSplit {
  std::size_t total = 0;
  std::size_t novel = 0;
  std::size_t updated = 0;

  bool operator==(const BudgetSplit&) const = default;
};

inline BudgetSplit allocate_budget(std::size_t n, std::size_t n_novel_samples, std::size_t n_novel_clusters,
                                   const QueryConfig& config) {
  config.validate();
  if (n == 0) throw Error("allocate_budget: empty chunk");
  BudgetSplit b;
  // The epsilon absorbs representation error in beta * n (0.1 * 1000 = 100.00000000000001).
  b.total = static_cast<std::size_t>(std::ceil(config.beta_budget * static_cast<double>(n) - 1e-9));
  b.total = std::clamp<std::size_t>(b.total, 1, n);
  const auto proportional = static_cast<std::size_t>(
      std::llround(static_cast<double>(b.total) * static_cast<double>(n_novel_samples) / static_cast<double>(n)));
  const std::size_t floor = std::min(n_novel_clusters, b.total);
  b.novel = std::min(b.total, std::max(proportional, floor));
  b.updated = b.total - b.novel;
  return b;
}

/// Round-robin over novel clusters in report order, each yielding its members
/// by descending density.
inline std::vector<SampleId> representative_query(const ChunkClustering& clustering, const DriftReport& report,
                                                  std::span<const double> densities, std::size_t budget) {
  std::vector<std::vector<SampleId>> queues;
  for (const std::size_t c : report.novel) {
    auto members = clustering.clusters.at(c).members;
    const SampleId peak = clustering.clusters[c].peak;
    std::stable_sort(members.begin(), members.end(), [&](SampleId a, SampleId b) {
      if (a == peak || b == peak) return a == peak && b != peak;
      return densities[a] > densities[b];
    });
    queues.push_back(std::move(members));
  }
  std::vector<SampleId> out;
  for (std::size_t round = 0; out.size() < budget; ++round) {
    bool any = false;
    for (const auto& q : queues) {
      if (out.size() >= budget) break;
      if (round < q.size()) {
        out.push_back(q[round]);
        any = true;
      }
    }
    if (!any) break;
  }
  return out;
}

/// Distance to the assigned cluster's peak over its radius.
inline double informative_score(const Chunk& chunk, const ChunkClustering& clustering, SampleId id) {
  const ChunkCluster& c = clustering.clusters[clustering.assignments[id]];
  const double r = std::max(c.radius, std::numeric_limits<double>::epsilon());
  return distance(chunk.features(id), chunk.features(c.peak)) / r;
}

inline std::vector<SampleId> informative_query(const Chunk& chunk, const ChunkClustering& clustering,
                                               const DriftReport& report, std::size_t budget) {
  const auto candidates = partition_by_cluster_kind(chunk, clustering, report).updated;
  std::vector<std::pair<double, SampleId>> scored;
  scored.reserve(candidates.size());
  for (const SampleId id : candidates) scored.emplace_back(informative_score(chunk, clustering, id), id);
  const std::size_t take = std::min(budget, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<SampleId> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(scored[i].second);
  return out;
}

inline QueryBatch select_queries(const Chunk& chunk, const ChunkClustering& clustering, const DriftReport& report,
                                 std::span<const double> densities, const QueryConfig& config) {
  const auto parts = partition_by_cluster_kind(chunk, clustering, report);
  const auto split = allocate_budget(chunk.size(), parts.novel.size(), report.novel.size(), config);
  QueryBatch batch;
  batch.budget = split.total;
  batch.representative = representative_query(clustering, report, densities, split.novel);
  batch.informative = informative_query(chunk, clustering, report, split.updated);
  return batch;
}

/// Selects Q_t, asks the oracle once and checks that the answer covers Q_t exactly.
inline std::pair<QueryBatch, LabeledBatch> active_query(const Chunk& chunk, const ChunkClustering& clustering,
                                                        const DriftReport& report, std::span<const double> densities,
                                                        Oracle& oracle, const QueryConfig& config) {
  QueryBatch batch = select_queries(chunk, clustering, report, densities, config);
  LabeledBatch labels;
  try {
    labels = oracle.label(QueryRequest{chunk.t, chunk, batch, clustering.assignments});
  } catch (const QueryAborted&) {
    throw;
  } catch (const std::exception& e) {
    throw QueryAborted(std::string("oracle failed: ") + e.what(), batch);
  }
  const auto ids = batch.all();
  bool ok = labels.labels.size() == ids.size();
  for (const SampleId id : ids) {
    const auto it = labels.labels.find(id);
    ok = ok && it != labels.labels.end() && !it->second.empty();
  }
  if (!ok) throw QueryAborted("oracle answer does not cover the queried samples", batch);
  return {std::move(batch), std::move(labels)};
}

}  // namespace cdscal
