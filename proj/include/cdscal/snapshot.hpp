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

// JSON encoding of configs and stream summaries, plus the versioned
// snapshot document. Doubles are written in shortest round-trip form, so a
// summary read back is bit-identical to the one written.

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cdscal/pipeline.hpp"

namespace cdscal {

using json = nlohmann::json;

inline constexpr const char* kFormatVersion = "cdsc-al/1";

class SnapshotError : public Error {
 public:
  SnapshotError(const std::string& what, std::optional<std::size_t> byte = std::nullopt)
      : Error(what), byte_(byte) {}
  std::optional<std::size_t> byte() const noexcept { return byte_; }

 private:
  std::optional<std::size_t> byte_;
};

inline void to_json(json& j, const ClusterRecord& c) {
  j = json{{"cluster_id", c.cluster_id}, {"center", c.center}, {"density", c.density},
           {"radius", c.radius}, {"last_updated", c.last_updated}};
}
inline void from_json(const json& j, ClusterRecord& c) {
  j.at("cluster_id").get_to(c.cluster_id);
  j.at("center").get_to(c.center);
  j.at("density").get_to(c.density);
  j.at("radius").get_to(c.radius);
  j.at("last_updated").get_to(c.last_updated);
}

inline void to_json(json& j, const SubClusterRecord& s) {
  j = json{{"parent_cluster_id", s.parent_cluster_id}, {"center", s.center}, {"label", s.label},
           {"density", s.density}, {"last_updated", s.last_updated}};
}
inline void from_json(const json& j, SubClusterRecord& s) {
  j.at("parent_cluster_id").get_to(s.parent_cluster_id);
  j.at("center").get_to(s.center);
  j.at("label").get_to(s.label);
  j.at("density").get_to(s.density);
  j.at("last_updated").get_to(s.last_updated);
}

inline void to_json(json& j, const StreamSummary& s) {
  j = json{{"clusters", s.clusters}, {"subclusters", s.subclusters}, {"next_cluster_id", s.next_cluster_id}};
}
inline void from_json(const json& j, StreamSummary& s) {
  j.at("clusters").get_to(s.clusters);
  j.at("subclusters").get_to(s.subclusters);
  j.at("next_cluster_id").get_to(s.next_cluster_id);
}

// Config sections accept partial objects; missing fields keep their defaults.

inline void to_json(json& j, const DensityConfig& c) {
  j = json{{"lambda_share", c.lambda_share}, {"eta_overlap", c.eta_overlap}};
}
inline void from_json(const json& j, DensityConfig& c) {
  c.lambda_share = j.value("lambda_share", c.lambda_share);
  c.eta_overlap = j.value("eta_overlap", c.eta_overlap);
}

inline void to_json(json& j, const DriftConfig& c) {
  j = json{{"rho_neighbor", c.rho_neighbor}, {"epsilon_band", c.epsilon_band},
           {"theta_drop", c.theta_drop}, {"min_boundary", c.min_boundary}};
}
inline void from_json(const json& j, DriftConfig& c) {
  c.rho_neighbor = j.value("rho_neighbor", c.rho_neighbor);
  c.epsilon_band = j.value("epsilon_band", c.epsilon_band);
  c.theta_drop = j.value("theta_drop", c.theta_drop);
  c.min_boundary = j.value("min_boundary", c.min_boundary);
}

inline void to_json(json& j, const QueryConfig& c) { j = json{{"beta_budget", c.beta_budget}}; }
inline void from_json(const json& j, QueryConfig& c) { c.beta_budget = j.value("beta_budget", c.beta_budget); }

inline void to_json(json& j, const PipelineConfig& c) {
  j = json{{"density", c.density}, {"drift", c.drift}, {"query", c.query}, {"k_neighbors", c.k_neighbors}};
  j["stale_after"] = c.stale_after ? json(*c.stale_after) : json(nullptr);
}
inline void from_json(const json& j, PipelineConfig& c) {
  if (j.contains("density")) j.at("density").get_to(c.density);
  if (j.contains("drift")) j.at("drift").get_to(c.drift);
  if (j.contains("query")) j.at("query").get_to(c.query);
  c.k_neighbors = j.value("k_neighbors", c.k_neighbors);
  if (j.contains("stale_after")) {
    const auto& s = j.at("stale_after");
    c.stale_after = s.is_null() ? std::nullopt : std::optional<int>(s.get<int>());
  }
}

/// Parses JSON text, mapping syntax errors to SnapshotError with the byte offset.
inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SnapshotError(what + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what(), e.byte);
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A snapshot document: version tag, last processed chunk, summary, and an
/// optional caller-defined payload (the harness stores its metric history).
struct Snapshot {
  int t = 0;
  StreamSummary summary;
  json extra = json::object();
};

inline json snapshot_to_json(const Snapshot& s) {
  return json{{"version", kFormatVersion}, {"t", s.t}, {"summary", s.summary}, {"extra", s.extra}};
}

inline Snapshot snapshot_from_json(const json& j) {
  if (!j.is_object() || !j.contains("version")) throw SnapshotError("snapshot: missing version tag");
  const auto version = j.at("version").get<std::string>();
  if (version != kFormatVersion)
    throw SnapshotError("snapshot: version mismatch (found \"" + version + "\", expected \"" + kFormatVersion + "\")");
  Snapshot s;
  try {
    s.t = j.at("t").get<int>();
    s.summary = j.at("summary").get<StreamSummary>();
    if (j.contains("extra")) s.extra = j.at("extra");
  } catch (const json::exception& e) {
    throw SnapshotError(std::string("snapshot: malformed document: ") + e.what());
  }
  try {
    audit(s.summary);
  } catch (const InvariantError& e) {
    throw SnapshotError(std::string("snapshot: ") + e.what());
  }
  return s;
}

inline void write_snapshot(const std::string& path, const Snapshot& s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << snapshot_to_json(s).dump(1) << '\n';
}

inline Snapshot read_snapshot(const std::string& path) {
  return snapshot_from_json(parse_json_text(read_text_file(path), path));
}

}  // namespace cdscal
