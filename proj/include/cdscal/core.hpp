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

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cdscal {

using Features = std::vector<double>;
using SampleId = std::size_t;
using ClusterId = std::int64_t;
// Class identifiers are opaque strings so annotators can declare new classes.
using ClassLabel = std::string;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChunkError : public Error {
 public:
  enum class Kind { empty, dimension, non_finite, bad_ids };

  ChunkError(Kind kind, int chunk, std::optional<SampleId> sample, const std::string& what)
      : Error(what), kind_(kind), chunk_(chunk), sample_(sample) {}

  Kind kind() const noexcept { return kind_; }
  int chunk() const noexcept { return chunk_; }
  std::optional<SampleId> sample() const noexcept { return sample_; }

 private:
  Kind kind_;
  int chunk_;
  std::optional<SampleId> sample_;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class NoPrototypesError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Stream data
// ---------------------------------------------------------------------------

struct Sample {
  SampleId id = 0;
  Features features;
};

struct Chunk {
  int t = 1;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t dim() const noexcept { return samples.empty() ? 0 : samples.front().features.size(); }
  const Features& features(SampleId id) const { return samples.at(id).features; }
};

/// Builds a chunk with ids 0..rows-1 from raw feature rows.
inline Chunk make_chunk(int t, std::vector<Features> rows) {
  Chunk chunk;
  chunk.t = t;
  chunk.samples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) chunk.samples.push_back({i, std::move(rows[i])});
  return chunk;
}

// ---------------------------------------------------------------------------
// Stream summary (macro level: clusters, micro level: labelled sub-clusters)
// ---------------------------------------------------------------------------

struct ClusterRecord {
  ClusterId cluster_id = 0;
  Features center;
  double density = 0.0;  // normalized by chunk size
  double radius = 0.0;
  int last_updated = 0;

  bool operator==(const ClusterRecord&) const = default;
};

struct SubClusterRecord {
  ClusterId parent_cluster_id = 0;
  Features center;
  ClassLabel label;
  double density = 0.0;
  int last_updated = 0;

  bool operator==(const SubClusterRecord&) const = default;
};

struct StreamSummary {
  std::vector<ClusterRecord> clusters;
  std::vector<SubClusterRecord> subclusters;
  ClusterId next_cluster_id = 0;

  bool empty() const noexcept { return clusters.empty(); }

  const ClusterRecord* find(ClusterId id) const {
    for (const auto& c : clusters)
      if (c.cluster_id == id) return &c;
    return nullptr;
  }
  ClusterRecord* find(ClusterId id) {
    for (auto& c : clusters)
      if (c.cluster_id == id) return &c;
    return nullptr;
  }

  bool operator==(const StreamSummary&) const = default;
};

/// Walks the summary and throws InvariantError on the first violation.
inline void audit(const StreamSummary& summary) {
  std::set<ClusterId> ids;
  for (const auto& c : summary.clusters) {
    if (!ids.insert(c.cluster_id).second)
      throw InvariantError("duplicate cluster_id " + std::to_string(c.cluster_id));
    if (c.cluster_id >= summary.next_cluster_id)
      throw InvariantError("cluster_id " + std::to_string(c.cluster_id) + " not below next_cluster_id");
    if (!(c.density > 0.0)) throw InvariantError("cluster " + std::to_string(c.cluster_id) + " has non-positive density");
    if (!(c.radius >= 0.0)) throw InvariantError("cluster " + std::to_string(c.cluster_id) + " has negative radius");
  }
  std::set<std::pair<ClusterId, ClassLabel>> pairs;
  for (const auto& s : summary.subclusters) {
    if (!ids.count(s.parent_cluster_id))
      throw InvariantError("sub-cluster references missing cluster " + std::to_string(s.parent_cluster_id));
    if (!pairs.insert({s.parent_cluster_id, s.label}).second)
      throw InvariantError("duplicate sub-cluster (" + std::to_string(s.parent_cluster_id) + ", " + s.label + ")");
  }
}

// ---------------------------------------------------------------------------
// Per-chunk intermediate results
// ---------------------------------------------------------------------------

struct ChunkCluster {
  SampleId peak = 0;
  std::vector<SampleId> members;  // sorted ascending
  double raw_density = 0.0;
  double density = 0.0;  // raw_density / n
  double radius = 0.0;

  bool operator==(const ChunkCluster&) const = default;
};

struct ChunkClustering {
  std::vector<std::size_t> assignments;  // sample id -> index into clusters
  std::vector<ChunkCluster> clusters;
  double sigma_share = 0.0;
  std::vector<double> densities;  // normalized per-sample sharing density
};

struct DriftReport {
  std::vector<std::size_t> novel;
  std::vector<std::pair<ClusterId, std::size_t>> updated;         // (historical id, chunk cluster)
  std::vector<std::pair<ClusterId, std::size_t>> rejected_novel;  // attached to historical id

  static DriftReport all_novel(std::size_t n_clusters) {
    DriftReport r;
    for (std::size_t i = 0; i < n_clusters; ++i) r.novel.push_back(i);
    return r;
  }
};

struct QueryBatch {
  std::vector<SampleId> representative;
  std::vector<SampleId> informative;
  std::size_t budget = 0;

  std::size_t size() const noexcept { return representative.size() + informative.size(); }
  std::vector<SampleId> all() const {
    std::vector<SampleId> ids = representative;
    ids.insert(ids.end(), informative.begin(), informative.end());
    return ids;
  }
};

struct LabeledBatch {
  std::map<SampleId, ClassLabel> labels;

  bool operator==(const LabeledBatch&) const = default;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline const Chunk& validate_chunk(const Chunk& chunk, std::optional<std::size_t> expected_dim = std::nullopt) {
  const auto where = [&](SampleId id) {
    return "chunk " + std::to_string(chunk.t) + ", sample " + std::to_string(id);
  };
  if (chunk.samples.empty())
    throw ChunkError(ChunkError::Kind::empty, chunk.t, std::nullopt, "chunk " + std::to_string(chunk.t) + " is empty");
  const std::size_t dim = expected_dim.value_or(chunk.samples.front().features.size());
  if (dim == 0)
    throw ChunkError(ChunkError::Kind::dimension, chunk.t, SampleId{0}, where(0) + ": zero-dimensional features");
  for (std::size_t i = 0; i < chunk.samples.size(); ++i) {
    const Sample& s = chunk.samples[i];
    if (s.id != i)
      throw ChunkError(ChunkError::Kind::bad_ids, chunk.t, s.id,
                       where(s.id) + ": expected id " + std::to_string(i));
    if (s.features.size() != dim)
      throw ChunkError(ChunkError::Kind::dimension, chunk.t, s.id,
                       where(s.id) + ": dimension " + std::to_string(s.features.size()) + ", expected " +
                           std::to_string(dim));
    for (double v : s.features)
      if (!std::isfinite(v))
        throw ChunkError(ChunkError::Kind::non_finite, chunk.t, s.id, where(s.id) + ": non-finite feature value");
  }
  return chunk;
}

}  // namespace cdscal
