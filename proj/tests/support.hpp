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

// Fixture generators and brute-force reference implementations shared by the
// unit and acceptance tests. Nothing here calls into the library's algorithms.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cdscal/core.hpp"

namespace cdscal::testing {

struct Rng {
  explicit Rng(std::uint64_t seed) : engine(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
  double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(engine); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine);
  }

  std::mt19937_64 engine;
};

inline std::vector<Features> uniform_rows(Rng& rng, std::size_t n, std::size_t m, double lo, double hi) {
  std::vector<Features> rows(n, Features(m));
  for (auto& r : rows)
    for (auto& v : r) v = rng.uniform(lo, hi);
  return rows;
}

/// Gaussian blobs around random centres; returns rows and the blob index of each row.
inline std::vector<Features> blob_rows(Rng& rng, std::size_t n, std::size_t m, std::size_t blobs, double spread,
                                       double sd) {
  std::vector<Features> centres = uniform_rows(rng, blobs, m, -spread, spread);
  std::vector<Features> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centres[rng.index(0, blobs - 1)];
    Features x(m);
    for (std::size_t k = 0; k < m; ++k) x[k] = rng.normal(c[k], sd);
    rows.push_back(std::move(x));
  }
  return rows;
}

inline std::vector<Features> gaussian_rows(Rng& rng, std::size_t n, const Features& mean, double sd) {
  std::vector<Features> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Features x(mean.size());
    for (std::size_t k = 0; k < mean.size(); ++k) x[k] = rng.normal(mean[k], sd);
    rows.push_back(std::move(x));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Reference implementations
// ---------------------------------------------------------------------------

inline double ref_distance(const Features& a, const Features& b) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) s += (static_cast<long double>(a[k]) - b[k]) * (static_cast<long double>(a[k]) - b[k]);
  return static_cast<double>(std::sqrt(s));
}

inline std::vector<std::vector<double>> ref_distances(const std::vector<Features>& rows) {
  std::vector<std::vector<double>> d(rows.size(), std::vector<double>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) d[i][j] = ref_distance(rows[i], rows[j]);
  return d;
}

inline std::vector<double> ref_density(const std::vector<std::vector<double>>& d, double sigma) {
  std::vector<double> f(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j)
      if (d[i][j] < sigma) f[i] += 1.0 - d[i][j] / sigma;
  return f;
}

/// Connected components of the graph linking pairs at distance <= sigma, via union-find.
inline std::set<std::set<SampleId>> ref_components(const std::vector<std::vector<double>>& d, double sigma) {
  const std::size_t n = d.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (d[i][j] <= sigma) parent[find(i)] = find(j);
  std::map<std::size_t, std::set<SampleId>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].insert(i);
  std::set<std::set<SampleId>> out;
  for (auto& [root, g] : groups) out.insert(g);
  return out;
}

struct RefPrototype {
  Features x;
  std::string label;
};

/// Full sort of all prototypes for every sample, then a vote over the first k.
inline std::vector<std::string> ref_knn(const std::vector<RefPrototype>& protos, const std::vector<Features>& rows,
                                        std::size_t k) {
  std::vector<std::string> out;
  for (const auto& x : rows) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t p = 0; p < protos.size(); ++p) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - protos[p].x[j]) * (x[j] - protos[p].x[j]);
      order.emplace_back(s, p);
    }
    std::sort(order.begin(), order.end());
    const std::size_t kk = std::min(k, protos.size());
    std::map<std::string, std::size_t> votes;
    for (std::size_t i = 0; i < kk; ++i) ++votes[protos[order[i].second].label];
    std::size_t best = 0;
    for (const auto& [l, v] : votes) best = std::max(best, v);
    // The nearest neighbour whose label holds the maximal vote wins.
    for (std::size_t i = 0; i < kk; ++i) {
      const auto& l = protos[order[i].second].label;
      if (votes[l] == best) {
        out.push_back(l);
        break;
      }
    }
  }
  return out;
}

/// Per-class confusion-matrix metrics computed by explicit matrix construction.
inline std::pair<double, double> ref_ba_macro_f(const std::vector<std::string>& truth,
                                                const std::vector<std::string>& pred) {
  std::set<std::string> labels(truth.begin(), truth.end());
  labels.insert(pred.begin(), pred.end());
  std::vector<std::string> idx(labels.begin(), labels.end());
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = i;
  std::vector<std::vector<double>> cm(idx.size(), std::vector<double>(idx.size(), 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) cm[pos[truth[i]]][pos[pred[i]]] += 1.0;

  const std::set<std::string> present(truth.begin(), truth.end());
  double ba = 0.0, f = 0.0;
  for (const auto& c : present) {
    const std::size_t r = pos[c];
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      row += cm[r][j];
      col += cm[j][r];
    }
    const double tp = cm[r][r];
    const double recall = tp / row;
    const double precision = col > 0.0 ? tp / col : 0.0;
    ba += recall;
    f += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return {ba / static_cast<double>(present.size()), f / static_cast<double>(present.size())};
}

// ---------------------------------------------------------------------------
// Filesystem helpers
// ---------------------------------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cdscal-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(++counter));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace cdscal::testing
