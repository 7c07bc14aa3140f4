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

// Chunk-by-chunk replay of a labelled stream through the pipeline.
//
// Each chunk is classified before any of its labels reach the model; only
// the actively queried labels are revealed, by the oracle. Metrics are taken
// over the samples that were not queried. Results go to a JSON-lines log that
// depends only on the inputs; wall-clock timings go to a separate sink.

#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <set>

#include "cdscal/harness/metrics.hpp"
#include "cdscal/harness/stream.hpp"
#include "cdscal/pipeline.hpp"
#include "cdscal/snapshot.hpp"

namespace cdscal::harness {

/// Answers from the hidden ground truth of the chunk with the requested index.
class SimulatedOracle : public Oracle {
 public:
  explicit SimulatedOracle(const std::vector<LabeledChunk>& chunks) : chunks_(chunks) {}

  LabeledBatch label(const QueryRequest& request) override {
    ++calls_;
    const auto t = static_cast<std::size_t>(request.t);
    if (t < 1 || t > chunks_.size()) throw Error("simulated oracle: no ground truth for chunk " + std::to_string(t));
    const auto& truth = chunks_[t - 1].truth;
    LabeledBatch out;
    for (const SampleId id : request.batch.all()) out.labels.emplace(id, truth.at(id));
    return out;
  }

  std::size_t calls() const noexcept { return calls_; }

 private:
  const std::vector<LabeledChunk>& chunks_;
  std::size_t calls_ = 0;
};

struct ChunkMetrics {
  int t = 0;
  std::optional<double> balanced_accuracy;  // empty when every sample was queried
  std::optional<double> macro_f;
  std::size_t n_eval = 0;
  std::size_t queried = 0;
};

inline json to_json_value(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline void to_json(json& j, const ChunkMetrics& m) {
  j = json{{"t", m.t}, {"balanced_accuracy", to_json_value(m.balanced_accuracy)},
           {"macro_f", to_json_value(m.macro_f)}, {"n_eval", m.n_eval}, {"queried", m.queried}};
}
inline void from_json(const json& j, ChunkMetrics& m) {
  j.at("t").get_to(m.t);
  const auto opt = [&](const char* k) {
    return j.at(k).is_null() ? std::nullopt : std::optional<double>(j.at(k).get<double>());
  };
  m.balanced_accuracy = opt("balanced_accuracy");
  m.macro_f = opt("macro_f");
  j.at("n_eval").get_to(m.n_eval);
  j.at("queried").get_to(m.queried);
}

struct Aggregate {
  std::size_t chunks = 0;
  std::size_t evaluated_chunks = 0;
  double balanced_accuracy = 0.0;
  double macro_f = 0.0;
  std::size_t queried = 0;
};

inline Aggregate aggregate(std::span<const ChunkMetrics> metrics) {
  Aggregate a;
  a.chunks = metrics.size();
  for (const auto& m : metrics) {
    a.queried += m.queried;
    if (!m.balanced_accuracy) continue;
    ++a.evaluated_chunks;
    a.balanced_accuracy += *m.balanced_accuracy;
    a.macro_f += *m.macro_f;
  }
  if (a.evaluated_chunks > 0) {
    a.balanced_accuracy /= static_cast<double>(a.evaluated_chunks);
    a.macro_f /= static_cast<double>(a.evaluated_chunks);
  }
  return a;
}

inline ChunkMetrics evaluate_chunk(const LabeledChunk& lc, const ChunkResult& result) {
  ChunkMetrics m;
  m.t = lc.chunk.t;
  const auto q = result.queries.all();
  const std::set<SampleId> queried(q.begin(), q.end());
  m.queried = queried.size();
  std::vector<ClassLabel> truth, predicted;
  for (SampleId id = 0; id < lc.chunk.size(); ++id) {
    if (queried.count(id)) continue;
    truth.push_back(lc.truth[id]);
    predicted.push_back(result.predictions.labels.at(id));
  }
  m.n_eval = truth.size();
  if (!truth.empty()) {
    m.balanced_accuracy = balanced_accuracy(truth, predicted);
    m.macro_f = macro_f(truth, predicted);
  }
  return m;
}

inline json chunk_record(const ChunkMetrics& m, const ChunkResult& r) {
  json j = m;
  j["type"] = "chunk";
  j["representative"] = r.queries.representative.size();
  j["informative"] = r.queries.informative.size();
  j["budget"] = r.queries.budget;
  j["chunk_clusters"] = r.n_chunk_clusters;
  j["novel"] = r.drift.novel.size();
  j["updated"] = r.drift.updated.size();
  j["rejected_novel"] = r.drift.rejected_novel.size();
  j["clusters"] = r.n_clusters;
  j["subclusters"] = r.n_subclusters;
  j["oracle_failed"] = r.oracle_failed;
  return j;
}

inline json aggregate_record(const Aggregate& a) {
  return json{{"type", "aggregate"}, {"chunks", a.chunks}, {"evaluated_chunks", a.evaluated_chunks},
              {"balanced_accuracy", a.balanced_accuracy}, {"macro_f", a.macro_f}, {"queried", a.queried}};
}

inline json timing_record(const ChunkResult& r) {
  return json{{"t", r.t},
              {"density_ms", r.timings.density_ms},
              {"drift_ms", r.timings.drift_ms},
              {"query_ms", r.timings.query_ms},
              {"classify_ms", r.timings.classify_ms},
              {"update_ms", r.timings.update_ms}};
}

/// Failure while replaying a stream, tagged with the chunk index.
class ExperimentError : public Error {
 public:
  ExperimentError(int t, const std::string& what, bool timed_out = false)
      : Error("chunk " + std::to_string(t) + ": " + what), t_(t), timed_out_(timed_out) {}
  int chunk() const noexcept { return t_; }
  bool timed_out() const noexcept { return timed_out_; }

 private:
  int t_;
  bool timed_out_;
};

struct ExperimentOptions {
  json header = json::object();           // echoed into the first log record
  std::ostream* log = nullptr;            // result log (JSON lines)
  std::ostream* timings = nullptr;        // wall-clock timings (JSON lines)
  std::optional<Snapshot> resume;         // continue after resume->t
  int snapshot_every = 0;                 // 0 disables periodic snapshots
  std::function<void(const Snapshot&)> on_snapshot;
  std::function<void(const ChunkResult&)> on_chunk;
};

struct ExperimentReport {
  std::vector<ChunkMetrics> chunks;
  Aggregate aggregate;
  StreamSummary summary;
};

inline Snapshot make_run_snapshot(int t, const StreamSummary& summary, std::span<const ChunkMetrics> history) {
  Snapshot s;
  s.t = t;
  s.summary = summary;
  s.extra = json{{"metrics", std::vector<ChunkMetrics>(history.begin(), history.end())}};
  return s;
}

inline ExperimentReport run_experiment(const std::vector<LabeledChunk>& chunks, const PipelineConfig& config,
                                       Oracle& oracle, const ExperimentOptions& options = {}) {
  StreamSummary summary;
  std::vector<ChunkMetrics> history;
  int start = 1;
  if (options.resume) {
    summary = options.resume->summary;
    start = options.resume->t + 1;
    if (options.resume->extra.contains("metrics")) history = options.resume->extra.at("metrics").get<std::vector<ChunkMetrics>>();
  }

  if (options.log) {
    json header = options.header;
    header["type"] = "header";
    header["version"] = kFormatVersion;
    header["config"] = config;
    if (options.resume) header["resumed_after"] = options.resume->t;
    *options.log << header.dump() << '\n';
  }

  Pipeline pipeline(config, std::move(summary));
  for (const auto& lc : chunks) {
    if (lc.chunk.t < start) continue;
    ChunkResult result;
    try {
      result = pipeline.process(lc.chunk, oracle);
    } catch (const QueryAborted& e) {
      if (e.timed_out() && options.on_snapshot)
        options.on_snapshot(make_run_snapshot(lc.chunk.t - 1, pipeline.summary(), history));
      throw ExperimentError(lc.chunk.t, e.what(), e.timed_out());
    } catch (const Error& e) {
      throw ExperimentError(lc.chunk.t, e.what());
    }
    const ChunkMetrics m = evaluate_chunk(lc, result);
    history.push_back(m);
    if (options.log) *options.log << chunk_record(m, result).dump() << '\n';
    if (options.timings) *options.timings << timing_record(result).dump() << '\n';
    if (options.on_chunk) options.on_chunk(result);
    if (options.snapshot_every > 0 && lc.chunk.t % options.snapshot_every == 0 && options.on_snapshot)
      options.on_snapshot(make_run_snapshot(lc.chunk.t, pipeline.summary(), history));
  }

  ExperimentReport report;
  report.chunks = std::move(history);
  report.aggregate = aggregate(report.chunks);
  report.summary = pipeline.summary();
  if (options.log) *options.log << aggregate_record(report.aggregate).dump() << '\n';
  return report;
}

}  // namespace cdscal::harness
