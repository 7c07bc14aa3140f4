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


// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Oracles come from support.hpp and never call the library's
// algorithms.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "cdscal/cli.hpp"
#include "support.hpp"

namespace {

using namespace cdscal;
using cdscal::testing::Rng;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string data_dir() { return CDSCAL_DATA_DIR; }

// P1: knn_propagate equals a full-sort KNN on random fixtures.
Outcome knn_equivalence() {
  Rng rng(1001);
  const auto start = Clock::now();
  std::size_t mismatches = 0, samples = 0;
  for (int f = 0; f < 200; ++f) {
    const std::size_t n = rng.index(1, 500), m = rng.index(1, 10), p = rng.index(1, 50);
    const std::size_t labels = rng.index(1, 5);
    const auto rows = cdscal::testing::uniform_rows(rng, n, m, -5.0, 5.0);
    const auto proto_rows = cdscal::testing::uniform_rows(rng, p, m, -5.0, 5.0);
    PrototypeSet protos;
    std::vector<cdscal::testing::RefPrototype> ref;
    for (const auto& x : proto_rows) {
      const std::string l = "L" + std::to_string(rng.index(0, labels - 1));
      protos.push_back({x, l, Prototype::Source::subcluster});
      ref.push_back({x, l});
    }
    const Chunk chunk = make_chunk(1, rows);
    const auto got = knn_propagate(protos, chunk, QueryBatch{}, LabeledBatch{}, 5);
    const auto want = cdscal::testing::ref_knn(ref, rows, 5);
    for (std::size_t i = 0; i < n; ++i) mismatches += got.labels.at(i) != want[i];
    samples += n;
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 10.0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(samples) + " samples, " +
              fmt("%.2f s", secs)};
}

// P2: sharing density and pre-merge clusters against naive loops and union-find.
Outcome density_oracle() {
  Rng rng(1002);
  double worst = 0.0;
  std::size_t cc_mismatch = 0, sigma_mismatch = 0;
  for (int f = 0; f < 100; ++f) {
    const std::size_t n = rng.index(2, 300), m = rng.index(1, 6);
    const auto rows = f % 2 ? cdscal::testing::uniform_rows(rng, n, m, -3.0, 3.0)
                            : cdscal::testing::blob_rows(rng, n, m, rng.index(1, 5), 8.0, 1.0);
    const Chunk chunk = make_chunk(1, rows);
    const auto ref_d = cdscal::testing::ref_distances(rows);
    double diameter = 0.0;
    for (const auto& r : ref_d)
      for (const double v : r) diameter = std::max(diameter, v);
    const double sigma = 0.1 * diameter;

    const auto clustering = extract_clusters(chunk, DensityConfig{});
    if (std::abs(clustering.sigma_share - sigma) > 1e-12 * sigma) ++sigma_mismatch;
    const auto got = sharing_density(pairwise_distances(chunk), sigma);
    const auto want = cdscal::testing::ref_density(ref_d, sigma);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - want[i]) / std::abs(want[i]));

    std::set<std::set<SampleId>> sets;
    for (const auto& c : clustering.clusters) sets.insert(std::set<SampleId>(c.members.begin(), c.members.end()));
    if (sets != cdscal::testing::ref_components(ref_d, sigma)) ++cc_mismatch;
  }
  return {worst <= 1e-12 && cc_mismatch == 0 && sigma_mismatch == 0,
          fmt("max rel err %.3g, ", worst) + std::to_string(cc_mismatch) + " member-set mismatches, " +
              std::to_string(sigma_mismatch) + " sigma mismatches"};
}

harness::ClassSchedule schedule(const std::string& label, Features mean, Features drift, int start, int end,
                                double sd = 1.0) {
  harness::ClassSchedule c;
  c.label = label;
  c.variance = Features(mean.size(), sd * sd);
  c.mean = std::move(mean);
  c.drift = std::move(drift);
  c.start = start;
  c.end = end;
  return c;
}

// P3: per-chunk query count never exceeds the budget over a 20-chunk run.
Outcome budget_invariant() {
  harness::GeneratorSpec spec;
  spec.chunk_size = 1000;
  spec.chunks = 20;
  spec.seed = 1003;
  spec.classes = {schedule("a", {0, 0}, {0.1, 0}, 1, 20), schedule("b", {10, 0}, {0, 0.1}, 1, 20),
                  schedule("c", {0, 10}, {0.05, 0.05}, 4, 20), schedule("d", {10, 10}, {0, 0}, 8, 14),
                  schedule("e", {20, 5}, {-0.1, 0}, 12, 20)};
  const auto chunks = harness::make_chunks(harness::generate_gaussian_stream(spec).samples, 1000);
  harness::SimulatedOracle oracle(chunks);
  PipelineConfig config;
  config.query.beta_budget = 0.10;
  const auto report = harness::run_experiment(chunks, config, oracle);
  std::size_t violations = 0, max_q = 0;
  for (const auto& m : report.chunks) {
    violations += m.queried > 100;
    max_q = std::max(max_q, m.queried);
  }
  return {violations == 0 && report.chunks.size() == 20,
          std::to_string(violations) + " violations over " + std::to_string(report.chunks.size()) +
              " chunks, max queried " + std::to_string(max_q)};
}

// P4: a class appearing far from everything is confirmed novel on arrival.
Outcome novelty_detection() {
  int detected = 0, separated = 0;
  std::string misses;
  for (int s = 0; s < 10; ++s) {
    harness::GeneratorSpec spec;
    spec.chunk_size = 600;
    spec.chunks = 5;
    spec.seed = 2000 + static_cast<std::uint64_t>(s);
    spec.classes = {schedule("a", {0, 0}, {0, 0}, 1, 5), schedule("b", {10, 0}, {0, 0}, 1, 5),
                    schedule("new", {40, 30}, {0, 0}, 5, 5)};
    const auto chunks = harness::make_chunks(harness::generate_gaussian_stream(spec).samples, 600);
    harness::SimulatedOracle oracle(chunks);
    Pipeline pipeline(PipelineConfig{});
    ChunkResult last;
    for (const auto& lc : chunks) last = pipeline.process(lc.chunk, oracle);

    // Separation check on the arrival chunk, computed independently.
    std::vector<Features> rows;
    for (const auto& smp : chunks.back().chunk.samples) rows.push_back(smp.features);
    double diameter = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = i + 1; j < rows.size(); ++j)
        diameter = std::max(diameter, cdscal::testing::ref_distance(rows[i], rows[j]));
    const double sigma = 0.1 * diameter;
    const double sep = std::min(cdscal::testing::ref_distance({40, 30}, {0, 0}),
                                cdscal::testing::ref_distance({40, 30}, {10, 0}));
    separated += sep >= 6.0 * sigma;
    if (!last.drift.novel.empty()) {
      ++detected;
    } else {
      misses += " seed " + std::to_string(spec.seed);
    }
  }
  return {detected >= 9 && separated == 10,
          std::to_string(detected) + "/10 seeds confirmed novel at chunk 5, separation >= 6 sigma in " +
              std::to_string(separated) + "/10" + (misses.empty() ? "" : "; missed:" + misses)};
}

std::vector<harness::LabeledChunk> bundled(const std::string& name) {
  harness::StreamSpec s;
  s.source = data_dir() + "/specs/" + name + ".json";
  return harness::load_stream(s);
}

// P5: accuracy on the bundled well-separated drifting stream.
Outcome desk_accuracy() {
  const auto start = Clock::now();
  const auto chunks = bundled("desk-syn-A");
  harness::SimulatedOracle oracle(chunks);
  const auto report = harness::run_experiment(chunks, PipelineConfig{}, oracle);
  const double secs = seconds_since(start);
  const auto& a = report.aggregate;
  return {a.balanced_accuracy >= 0.90 && a.macro_f >= 0.90 && secs < 120.0,
          fmt("BA %.4f, F_mac %.4f, %.1f s", a.balanced_accuracy, a.macro_f, secs)};
}

// P6: overlapping class pairs keep several labelled sub-clusters.
Outcome overlap_handling() {
  const auto spec = harness::load_generator_spec(data_dir() + "/specs/desk-syn-B.json");
  const auto chunks = bundled("desk-syn-B");
  harness::SimulatedOracle oracle(chunks);
  const auto report = harness::run_experiment(chunks, PipelineConfig{}, oracle);

  // Overlap regions: midpoints of each class pair's generating means at the final chunk.
  std::vector<Features> midpoints;
  for (std::size_t i = 0; i + 1 < spec.classes.size(); i += 2) {
    const auto a = spec.mean_at(spec.classes[i], spec.chunks), b = spec.mean_at(spec.classes[i + 1], spec.chunks);
    midpoints.push_back({(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0});
  }
  std::size_t covering = 0, thin = 0;
  for (const auto& c : report.summary.clusters) {
    const bool covers = std::any_of(midpoints.begin(), midpoints.end(), [&](const Features& mp) {
      return cdscal::testing::ref_distance(c.center, mp) <= c.radius;
    });
    if (!covers) continue;
    ++covering;
    const auto subs = std::count_if(report.summary.subclusters.begin(), report.summary.subclusters.end(),
                                    [&](const SubClusterRecord& s) { return s.parent_cluster_id == c.cluster_id; });
    thin += subs < 2;
  }
  return {report.aggregate.balanced_accuracy >= 0.75 && covering > 0 && thin == 0,
          fmt("BA %.4f, ", report.aggregate.balanced_accuracy) + std::to_string(covering) +
              " clusters cover an overlap region, " + std::to_string(thin) + " with fewer than 2 sub-clusters"};
}

// P7: density-phase time grows quadratically.
Outcome complexity_scaling() {
  const auto phase_ms = [](std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const Chunk chunk = make_chunk(1, cdscal::testing::blob_rows(rng, n, 2, 6, 20.0, 1.0));
    const auto start = Clock::now();
    const DistanceMatrix d = pairwise_distances(chunk);
    const auto clustering = merge_overlapped(extract_clusters(chunk, d, DensityConfig{}), d, DensityConfig{});
    const double ms = seconds_since(start) * 1000.0;
    if (clustering.clusters.empty()) std::abort();
    return ms;
  };
  phase_ms(500, 7);  // warm-up
  std::vector<double> small, large;
  for (int r = 0; r < 5; ++r) {
    small.push_back(phase_ms(1000, 100 + static_cast<std::uint64_t>(r)));
    large.push_back(phase_ms(2000, 200 + static_cast<std::uint64_t>(r)));
  }
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double ratio = median(large) / median(small);
  return {ratio >= 2.5 && ratio <= 6.0,
          fmt("median %.1f ms at n=1000, %.1f ms at n=2000, ratio %.2f", median(small), median(large), ratio)};
}

// P8: identical runs give identical logs; resuming reproduces the tail.
Outcome determinism() {
  cdscal::testing::TempDir dir("acceptance");
  std::ostringstream out, err;
  cli::RunManifest m;
  m.stream.source = data_dir() + "/specs/desk-syn-A.json";
  m.snapshot_every = 10;
  m.out = dir.file("first");
  if (cli::cmd_run(m, out, err) != cli::kExitOk) return {false, "first run failed: " + err.str()};
  m.out = dir.file("second");
  if (cli::cmd_run(m, out, err) != cli::kExitOk) return {false, "second run failed: " + err.str()};
  const auto first = cdscal::testing::slurp(dir.file("first/results.jsonl"));
  const bool identical = first == cdscal::testing::slurp(dir.file("second/results.jsonl"));

  m.out = dir.file("resumed");
  m.snapshot_every = 0;
  m.resume = dir.file("first/snapshot-10.json");
  if (cli::cmd_run(m, out, err) != cli::kExitOk) return {false, "resumed run failed: " + err.str()};
  const auto a = cdscal::testing::lines_of(first);
  const auto b = cdscal::testing::lines_of(cdscal::testing::slurp(dir.file("resumed/results.jsonl")));
  // Header differs (resumed_after); chunk 11..19 plus aggregate must match.
  const bool tail = b.size() == 1 + 9 + 1 && a.size() == 1 + 19 + 1 &&
                    std::equal(b.begin() + 1, b.end(), a.end() - 10);
  return {identical && tail, std::string("logs ") + (identical ? "byte-identical" : "differ") + ", resumed tail " +
                                 (tail ? "identical" : "differs") + " (" + std::to_string(first.size()) + " bytes)"};
}

// P9: metrics against an explicit confusion matrix.
Outcome metrics_oracle() {
  Rng rng(1009);
  double worst = 0.0;
  const auto check = [&](const std::vector<ClassLabel>& t, const std::vector<ClassLabel>& p) {
    const auto [ba, f] = cdscal::testing::ref_ba_macro_f(t, p);
    worst = std::max({worst, std::abs(harness::balanced_accuracy(t, p) - ba), std::abs(harness::macro_f(t, p) - f)});
  };
  const std::vector<ClassLabel> wt{"A", "A", "B", "B"}, wp{"A", "A", "A", "B"};
  const bool worked = std::abs(harness::balanced_accuracy(wt, wp) - 0.75) <= 1e-12 &&
                      std::abs(harness::macro_f(wt, wp) - 11.0 / 15.0) <= 1e-12;
  check(wt, wp);
  for (int f = 1; f < 50; ++f) {
    const std::size_t n = rng.index(1, 40), k = rng.index(1, 5);
    std::vector<ClassLabel> t, p;
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back("c" + std::to_string(rng.index(0, k - 1)));
      // Predictions may include a label absent from the truth.
      p.push_back("c" + std::to_string(rng.index(0, k)));
    }
    check(t, p);
  }
  return {worked && worst <= 1e-12,
          std::string("worked example ") + (worked ? "ok" : "wrong") + fmt(", max abs err %.3g over 50 fixtures", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"P1 knn oracle equivalence", knn_equivalence}, {"P2 density oracle", density_oracle},
      {"P3 budget invariant", budget_invariant},      {"P4 novelty detection", novelty_detection},
      {"P5 desk-syn-A accuracy", desk_accuracy},      {"P6 overlap handling", overlap_handling},
      {"P7 complexity scaling", complexity_scaling},  {"P8 determinism and resume", determinism},
      {"P9 metrics oracle", metrics_oracle}};
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
