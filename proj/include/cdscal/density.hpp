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

// Fitness-sharing density and recursive peak extraction inside one chunk.

#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <iterator>
#include <limits>
#include <numeric>
#include <vector>

#include "cdscal/core.hpp"

namespace cdscal {

struct DensityConfig {
  double lambda_share = 0.1;  // sharing radius as a fraction of the chunk diameter
  double eta_overlap = 1.0;   // merge when peak distance <= eta * (R_i + R_j)

  void validate() const {
    if (!(lambda_share > 0.0 && lambda_share <= 1.0)) throw Error("density.lambda_share must lie in (0, 1]");
    if (!(eta_overlap > 0.0)) throw Error("density.eta_overlap must be positive");
  }
};

/// Dense symmetric n x n Euclidean distance matrix, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return d_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {d_.data() + i * n_, n_}; }

  double max() const noexcept { return d_.empty() ? 0.0 : *std::max_element(d_.begin(), d_.end()); }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

inline DistanceMatrix pairwise_distances(const Chunk& chunk) {
  const std::size_t n = chunk.size();
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& xi = chunk.samples[i].features;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = distance(xi, chunk.samples[j].features);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

/// Triangular sharing kernel max(0, 1 - d / sigma).
inline double sharing_kernel(double d, double sigma_share) noexcept {
  const double v = 1.0 - d / sigma_share;
  return v > 0.0 ? v : 0.0;
}

/// Raw sharing density F(i) = sum_j sh(d_ij), self included, so F(i) >= 1.
inline std::vector<double> sharing_density(const DistanceMatrix& d, double sigma_share) {
  if (!(sigma_share > 0.0)) throw Error("sharing_density: sigma_share must be positive");
  const std::size_t n = d.size();
  std::vector<double> f(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const double dij : d.row(i)) s += sharing_kernel(dij, sigma_share);
    f[i] = s;
  }
  return f;
}

inline double cluster_radius(const DistanceMatrix& d, SampleId peak, std::span<const SampleId> members) {
  double r = 0.0;
  for (const SampleId m : members) r = std::max(r, d(peak, m));
  return r;
}

/// Peak extraction over the residual set. Each step takes the densest
/// unassigned sample (lowest id on ties) and claims its sigma-linkage
/// component among unassigned samples.
///
/// The kernel vanishes beyond sigma_share, and every sample within sigma of
/// an unassigned sample is still unassigned (it would otherwise have been
/// claimed with that component). Residual densities therefore equal the
/// full-chunk densities and are evaluated once.
inline ChunkClustering extract_clusters(const Chunk& chunk, const DistanceMatrix& d, const DensityConfig& config) {
  config.validate();
  const std::size_t n = chunk.size();
  ChunkClustering out;
  out.assignments.assign(n, 0);
  if (n == 0) return out;

  const double diameter = d.max();
  if (diameter == 0.0) {
    // All samples coincide: one cluster centred on sample 0.
    ChunkCluster c;
    c.peak = 0;
    c.members.resize(n);
    std::iota(c.members.begin(), c.members.end(), SampleId{0});
    c.raw_density = static_cast<double>(n);
    c.density = 1.0;
    c.radius = 0.0;
    out.clusters.push_back(std::move(c));
    out.densities.assign(n, 1.0);
    out.sigma_share = 0.0;
    return out;
  }

  const double sigma = config.lambda_share * diameter;
  out.sigma_share = sigma;
  const std::vector<double> raw = sharing_density(d, sigma);
  out.densities.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.densities[i] = raw[i] / static_cast<double>(n);

  // Visit order: descending density, ascending id on ties.
  std::vector<SampleId> order(n);
  std::iota(order.begin(), order.end(), SampleId{0});
  std::stable_sort(order.begin(), order.end(), [&](SampleId a, SampleId b) { return raw[a] > raw[b]; });

  std::vector<bool> assigned(n, false);
  std::deque<SampleId> frontier;
  for (const SampleId peak : order) {
    if (assigned[peak]) continue;
    ChunkCluster c;
    c.peak = peak;
    c.raw_density = raw[peak];
    c.density = raw[peak] / static_cast<double>(n);
    const std::size_t index = out.clusters.size();

    assigned[peak] = true;
    frontier.push_back(peak);
    while (!frontier.empty()) {
      const SampleId u = frontier.front();
      frontier.pop_front();
      c.members.push_back(u);
      out.assignments[u] = index;
      const auto row = d.row(u);
      for (SampleId v = 0; v < n; ++v) {
        if (!assigned[v] && row[v] <= sigma) {
          assigned[v] = true;
          frontier.push_back(v);
        }
      }
    }
    std::sort(c.members.begin(), c.members.end());
    c.radius = cluster_radius(d, peak, c.members);
    out.clusters.push_back(std::move(c));
  }
  return out;
}

inline ChunkClustering extract_clusters(const Chunk& chunk, const DensityConfig& config) {
  return extract_clusters(chunk, pairwise_distances(chunk), config);
}

/// Merges cluster pairs whose peaks lie within eta * (R_i + R_j) until no
/// pair qualifies. The lowest qualifying index pair is merged first; the
/// survivor keeps the denser peak and takes the lower index.
inline ChunkClustering merge_overlapped(ChunkClustering clustering, const DistanceMatrix& d,
                                        const DensityConfig& config) {
  config.validate();
  auto& cs = clustering.clusters;
  const auto denser = [](const ChunkCluster& a, const ChunkCluster& b) {
    return a.raw_density > b.raw_density || (a.raw_density == b.raw_density && a.peak < b.peak);
  };
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < cs.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < cs.size() && !merged; ++j) {
        if (d(cs[i].peak, cs[j].peak) > config.eta_overlap * (cs[i].radius + cs[j].radius)) continue;
        ChunkCluster keep = denser(cs[i], cs[j]) ? cs[i] : cs[j];
        const ChunkCluster& other = denser(cs[i], cs[j]) ? cs[j] : cs[i];
        std::vector<SampleId> members;
        members.reserve(keep.members.size() + other.members.size());
        std::merge(keep.members.begin(), keep.members.end(), other.members.begin(), other.members.end(),
                   std::back_inserter(members));
        keep.members = std::move(members);
        keep.radius = cluster_radius(d, keep.peak, keep.members);
        cs[i] = std::move(keep);
        cs.erase(cs.begin() + static_cast<std::ptrdiff_t>(j));
        merged = true;
      }
    }
  }
  for (std::size_t c = 0; c < cs.size(); ++c)
    for (const SampleId m : cs[c].members) clustering.assignments[m] = c;
  return clustering;
}

inline ChunkClustering merge_overlapped(ChunkClustering clustering, const Chunk& chunk, const DensityConfig& config) {
  return merge_overlapped(std::move(clustering), pairwise_distances(chunk), config);
}

}  // namespace cdscal
