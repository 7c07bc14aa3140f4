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

// Command implementations behind tools/cdscal. Argument parsing lives in the
// tool; everything here takes resolved values and reports via streams and
// exit codes (0 ok, 1 error, 2 oracle timeout with a resumable snapshot).

#pragma once

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>

#include "cdscal/harness/experiment.hpp"
#include "cdscal/harness/source.hpp"
#include "cdscal/service.hpp"

namespace cdscal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitTimeout = 2;

struct RunManifest {
  std::optional<std::string> config_path;
  PipelineConfig pipeline;
  harness::StreamSpec stream;
  std::string oracle = "sim";  // sim | remote
  double timeout_s = 600.0;
  std::string out;
  int snapshot_every = 0;
  std::optional<std::string> resume;
  std::string host = "127.0.0.1";
  int port = 8765;

  void validate() const {
    pipeline.validate();
    if (oracle != "sim" && oracle != "remote") throw Error("oracle mode must be \"sim\" or \"remote\", got \"" + oracle + "\"");
    if (out.empty()) throw Error("output directory not set (--out)");
    if (stream.source.empty()) throw Error("stream source not set (--stream)");
    if (snapshot_every < 0) throw Error("snapshot_every must be non-negative");
    if (!(timeout_s > 0.0)) throw Error("oracle timeout must be positive");
  }

  json to_json_value() const {
    return json{{"pipeline", pipeline},
                {"stream", harness::to_json_value(stream)},
                {"oracle", {{"mode", oracle}, {"timeout_s", timeout_s}}},
                {"out", out},
                {"snapshot_every", snapshot_every}};
  }
};

/// Reads the config file sections "pipeline", "stream", "oracle", plus "out",
/// "seed" and "snapshot_every". Missing keys keep their defaults.
inline RunManifest manifest_from_config(const json& j) {
  RunManifest m;
  if (!j.is_object()) throw Error("config: expected a JSON object");
  try {
    if (j.contains("pipeline")) j.at("pipeline").get_to(m.pipeline);
    if (j.contains("stream")) {
      const auto& s = j.at("stream");
      m.stream.source = s.value("source", m.stream.source);
      m.stream.label_column = s.value("label_column", m.stream.label_column);
      if (s.contains("chunk_size") && !s.at("chunk_size").is_null()) m.stream.chunk_size = s.at("chunk_size").get<std::size_t>();
      if (s.contains("order")) m.stream.order = harness::parse_order(s.at("order").get<std::string>());
      if (s.contains("seed") && !s.at("seed").is_null()) m.stream.seed = s.at("seed").get<std::uint64_t>();
    }
    if (j.contains("seed") && !j.at("seed").is_null()) m.stream.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      m.oracle = o.value("mode", m.oracle);
      m.timeout_s = o.value("timeout_s", m.timeout_s);
    }
    m.out = j.value("out", m.out);
    m.snapshot_every = j.value("snapshot_every", m.snapshot_every);
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return m;
}

inline int cmd_generate(const std::string& spec_path, const std::string& out_path, std::optional<std::uint64_t> seed,
                        std::ostream& out, std::ostream& err) {
  try {
    auto spec = harness::load_generator_spec(spec_path);
    if (seed) spec.seed = *seed;
    const auto data = harness::generate_gaussian_stream(spec);
    harness::write_csv(out_path, data);
    out << "wrote " << data.samples.size() << " samples (" << spec.chunks << " chunks of " << spec.chunk_size
        << ") to " << out_path << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "generate: " << spec_path << ": " << e.what() << '\n';
    return kExitError;
  }
}

namespace detail {
inline void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw Error("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

inline std::string snapshot_path(const std::filesystem::path& dir, int t) {
  return (dir / ("snapshot-" + std::to_string(t) + ".json")).string();
}
}  // namespace detail

inline int cmd_run(const RunManifest& manifest, std::ostream& out, std::ostream& err) {
  try {
    manifest.validate();
    const std::filesystem::path dir(manifest.out);
    detail::ensure_writable_dir(dir);
    const auto chunks = harness::load_stream(manifest.stream);

    harness::ExperimentOptions options;
    // The output location is not part of the effective config, so logs of
    // identical runs written to different directories stay byte-identical.
    json effective = manifest.to_json_value();
    effective.erase("out");
    options.header = json{{"manifest", effective}};
    if (manifest.resume) options.resume = read_snapshot(*manifest.resume);
    std::ofstream log(dir / "results.jsonl", std::ios::binary | std::ios::trunc);
    std::ofstream timings(dir / "timings.jsonl", std::ios::binary | std::ios::trunc);
    options.log = &log;
    options.timings = &timings;
    options.snapshot_every = manifest.snapshot_every;
    options.on_snapshot = [&](const Snapshot& s) { write_snapshot(detail::snapshot_path(dir, s.t), s); };

    std::unique_ptr<Oracle> oracle;
    std::unique_ptr<service::SessionStore> store;
    std::unique_ptr<service::LabelServer> server;
    if (manifest.oracle == "sim") {
      oracle = std::make_unique<harness::SimulatedOracle>(chunks);
    } else {
      store = std::make_unique<service::SessionStore>();
      server = std::make_unique<service::LabelServer>(*store, manifest.host, manifest.port);
      const std::string session = store->open_session(manifest.to_json_value());
      err << "label service listening on http://" << manifest.host << ':' << server->port() << ", session " << session
          << '\n';
      oracle = std::make_unique<service::RemoteOracle>(
          *store, session, std::chrono::milliseconds(static_cast<long long>(manifest.timeout_s * 1000.0)),
          [&err](const service::PendingQuery& q) {
            err << "chunk " << q.t << ": " << q.items.size() << " samples awaiting labels\n";
          });
    }

    harness::ExperimentReport report;
    try {
      report = harness::run_experiment(chunks, manifest.pipeline, *oracle, options);
    } catch (const harness::ExperimentError& e) {
      log.flush();
      err << "run: " << e.what() << '\n';
      if (e.timed_out()) {
        err << "run: aborted waiting for labels; resume with --resume "
            << detail::snapshot_path(dir, e.chunk() - 1) << '\n';
        return kExitTimeout;
      }
      return kExitError;
    }
    const int last_t = chunks.empty() ? 0 : chunks.back().chunk.t;
    write_snapshot((dir / "summary.json").string(), harness::make_run_snapshot(last_t, report.summary, report.chunks));
    out << std::setprecision(4) << std::fixed << "chunks " << report.aggregate.chunks << "  BA "
        << report.aggregate.balanced_accuracy << "  F_mac " << report.aggregate.macro_f << "  queried "
        << report.aggregate.queried << "  clusters " << report.summary.clusters.size() << "  sub-clusters "
        << report.summary.subclusters.size() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "run: " << e.what() << '\n';
    return kExitError;
  }
}

inline int cmd_inspect(const std::string& path, std::ostream& out, std::ostream& err) {
  Snapshot snap;
  try {
    snap = read_snapshot(path);
  } catch (const std::exception& e) {
    err << "inspect: " << e.what() << '\n';
    return kExitError;
  }
  const auto& s = snap.summary;
  std::map<ClusterId, std::vector<ClassLabel>> labels;
  for (const auto& sc : s.subclusters) labels[sc.parent_cluster_id].push_back(sc.label);

  out << "snapshot " << kFormatVersion << " after chunk " << snap.t << '\n';
  out << "clusters |C| = " << s.clusters.size() << ", sub-clusters |SC| = " << s.subclusters.size() << '\n';
  out << std::left << std::setw(8) << "id" << std::setw(12) << "radius" << std::setw(12) << "density" << std::setw(9)
      << "updated" << "labels\n";
  for (const auto& c : s.clusters) {
    std::string ls;
    for (const auto& l : labels[c.cluster_id]) ls += (ls.empty() ? "" : ",") + l;
    out << std::left << std::setw(8) << c.cluster_id << std::setw(12) << std::setprecision(5) << c.radius
        << std::setw(12) << c.density << std::setw(9) << c.last_updated << ls << '\n';
  }
  return kExitOk;
}

/// Service port from CDSCAL_PORT, else the given default.
inline int port_from_env(int fallback = 8765) {
  if (const char* v = std::getenv("CDSCAL_PORT")) {
    try {
      return std::stoi(v);
    } catch (const std::exception&) {
      throw Error(std::string("CDSCAL_PORT is not a port number: ") + v);
    }
  }
  return fallback;
}

}  // namespace cdscal::cli
