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

#include <iostream>

#include <CLI11.hpp>

#include "cdscal/cli.hpp"

int main(int argc, char** argv) {
  using namespace cdscal;
  CLI::App app{"cdscal: clustering-based stream classification with active labelling"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a seeded synthetic stream as CSV");
  std::string spec_path, csv_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--spec,spec", spec_path, "Generator schedule (JSON)")->required();
  gen->add_option("--out,out", csv_out, "Output CSV path")->required();
  gen->add_option("--seed", gen_seed, "Override the schedule seed");

  auto* run = app.add_subcommand("run", "Replay a stream through the pipeline");
  std::string config_path, stream, oracle, out, resume, order, label_column;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chunk_size;
  std::optional<double> beta, timeout;
  std::optional<int> snapshot_every;
  run->add_option("--config", config_path, "Config file (JSON); flags override its values")->check(CLI::ExistingFile);
  run->add_option("--stream", stream, "CSV file or generator schedule");
  run->add_option("--oracle", oracle, "Label source")->check(CLI::IsMember({"sim", "remote"}));
  run->add_option("--seed", seed, "Stream seed");
  run->add_option("--chunk-size", chunk_size, "Samples per chunk");
  run->add_option("--beta", beta, "Label budget as a fraction of the chunk size");
  run->add_option("--out", out, "Output directory");
  run->add_option("--snapshot-every", snapshot_every, "Write a summary snapshot every N chunks");
  run->add_option("--resume", resume, "Continue from a snapshot written by an earlier run")->check(CLI::ExistingFile);
  run->add_option("--order", order, "Chunk ordering")->check(CLI::IsMember({"given", "abrupt", "gradual"}));
  run->add_option("--label-column", label_column, "Label column name for CSV input");
  run->add_option("--timeout", timeout, "Seconds to wait for remote labels");

  auto* inspect = app.add_subcommand("inspect", "Summarise a snapshot file");
  std::string snapshot;
  inspect->add_option("snapshot", snapshot, "Snapshot file")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) return cli::cmd_generate(spec_path, csv_out, gen_seed, std::cout, std::cerr);
  if (inspect->parsed()) return cli::cmd_inspect(snapshot, std::cout, std::cerr);

  cli::RunManifest manifest;
  try {
    if (!config_path.empty()) {
      manifest = cli::manifest_from_config(parse_json_text(read_text_file(config_path), config_path));
      manifest.config_path = config_path;
    }
    if (!stream.empty()) manifest.stream.source = stream;
    if (!oracle.empty()) manifest.oracle = oracle;
    if (seed) manifest.stream.seed = seed;
    if (chunk_size) manifest.stream.chunk_size = chunk_size;
    if (beta) manifest.pipeline.query.beta_budget = *beta;
    if (!out.empty()) manifest.out = out;
    if (snapshot_every) manifest.snapshot_every = *snapshot_every;
    if (!resume.empty()) manifest.resume = resume;
    if (!order.empty()) manifest.stream.order = harness::parse_order(order);
    if (!label_column.empty()) manifest.stream.label_column = label_column;
    if (timeout) manifest.timeout_s = *timeout;
    manifest.port = cli::port_from_env(manifest.port);
  } catch (const std::exception& e) {
    std::cerr << "run: " << e.what() << '\n';
    return cli::kExitError;
  }
  return cli::cmd_run(manifest, std::cout, std::cerr);
}
