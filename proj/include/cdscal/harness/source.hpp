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

#include <optional>
#include <string>

#include "cdscal/harness/generator.hpp"
#include "cdscal/harness/stream.hpp"
#include "cdscal/snapshot.hpp"

namespace cdscal::harness {

/// Where a stream comes from and how it is cut into chunks. A source ending
/// in ".csv" is ingested; anything else is read as a generator schedule.
struct StreamSpec {
  std::string source;
  std::string label_column = "label";
  std::optional<std::size_t> chunk_size;  // default: schedule's chunk_size, else 1000
  StreamOrder order = StreamOrder::given;
  std::optional<std::uint64_t> seed;      // overrides the schedule seed; drives reordering

  bool is_csv() const { return source.size() >= 4 && source.compare(source.size() - 4, 4, ".csv") == 0; }
};

inline json to_json_value(const StreamSpec& s) {
  json j{{"source", s.source}, {"label_column", s.label_column}, {"order", to_string(s.order)}};
  j["chunk_size"] = s.chunk_size ? json(*s.chunk_size) : json(nullptr);
  j["seed"] = s.seed ? json(*s.seed) : json(nullptr);
  return j;
}

inline GeneratorSpec load_generator_spec(const std::string& path) {
  return parse_generator_spec(parse_json_text(read_text_file(path), path));
}

inline std::vector<LabeledChunk> load_stream(const StreamSpec& spec) {
  if (spec.source.empty()) throw Error("stream source not set");
  LabeledData data;
  std::size_t chunk_size = spec.chunk_size.value_or(1000);
  if (spec.is_csv()) {
    data = ingest_csv(spec.source, spec.label_column);
  } else {
    GeneratorSpec g = load_generator_spec(spec.source);
    if (spec.seed) g.seed = *spec.seed;
    if (!spec.chunk_size) chunk_size = g.chunk_size;
    data = generate_gaussian_stream(g);
  }
  auto samples = reorder(std::move(data.samples), spec.order, spec.seed.value_or(1));
  return make_chunks(samples, chunk_size);
}

}  // namespace cdscal::harness
