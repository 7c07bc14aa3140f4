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

// Labelled sample sequences, CSV ingestion/emission, and chunking with
// drift-ordered replay.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cdscal/core.hpp"

namespace cdscal::harness {

struct LabeledSample {
  Features features;
  ClassLabel label;

  bool operator==(const LabeledSample&) const = default;
};

struct LabeledData {
  std::vector<std::string> feature_names;
  std::vector<LabeledSample> samples;

  bool operator==(const LabeledData&) const = default;
};

/// A chunk as the pipeline sees it plus the hidden ground truth, indexed by sample id.
struct LabeledChunk {
  Chunk chunk;
  std::vector<ClassLabel> truth;
};

class CsvError : public Error {
 public:
  CsvError(const std::string& what, std::size_t row = 0, std::string column = {})
      : Error(what), row_(row), column_(std::move(column)) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

namespace detail {
inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}
}  // namespace detail

/// Reads a headed CSV; every column except `label_column` must be numeric.
/// Row numbers in errors are file line numbers (the header is row 1).
inline LabeledData parse_csv(std::istream& in, const std::string& label_column) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).empty()) throw CsvError("csv: empty file");
  std::vector<std::string> header;
  for (const auto cell : detail::split(line)) header.emplace_back(cell);
  std::size_t label_index = header.size();
  LabeledData data;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column)
      label_index = c;
    else
      data.feature_names.emplace_back(header[c]);
  }
  if (label_index == header.size()) throw CsvError("csv: missing label column \"" + label_column + "\"", 1, label_column);
  if (data.feature_names.empty()) throw CsvError("csv: no feature columns", 1);

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() != header.size())
      throw CsvError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(header.size()),
                     row);
    LabeledSample s;
    s.features.reserve(data.feature_names.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_index) {
        if (cells[c].empty()) throw CsvError("csv: empty label at row " + std::to_string(row), row, label_column);
        s.label = std::string(cells[c]);
        continue;
      }
      double v = 0.0;
      if (!detail::parse_double(cells[c], v))
        throw CsvError("csv: unparsable number \"" + std::string(cells[c]) + "\" at row " + std::to_string(row) +
                           ", column \"" + header[c] + "\"",
                       row, header[c]);
      s.features.push_back(v);
    }
    data.samples.push_back(std::move(s));
  }
  if (data.samples.empty()) throw CsvError("csv: no data rows");
  return data;
}

inline LabeledData ingest_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw CsvError("csv: cannot open " + path);
  return parse_csv(in, label_column);
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_csv(std::ostream& out, const LabeledData& data, const std::string& label_column = "label") {
  for (const auto& name : data.feature_names) out << name << ',';
  out << label_column << '\n';
  for (const auto& s : data.samples) {
    for (double v : s.features) out << format_double(v) << ',';
    out << s.label << '\n';
  }
}

inline void write_csv(const std::string& path, const LabeledData& data, const std::string& label_column = "label") {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  write_csv(out, data, label_column);
}

enum class StreamOrder { given, abrupt, gradual };

inline StreamOrder parse_order(const std::string& s) {
  if (s == "given") return StreamOrder::given;
  if (s == "abrupt") return StreamOrder::abrupt;
  if (s == "gradual") return StreamOrder::gradual;
  throw Error("unknown stream order \"" + s + "\" (expected given, abrupt or gradual)");
}

inline std::string to_string(StreamOrder o) {
  switch (o) {
    case StreamOrder::given: return "given";
    case StreamOrder::abrupt: return "abrupt";
    case StreamOrder::gradual: return "gradual";
  }
  return "given";
}

/// Reorders samples to simulate drift. Classes are ranked by first
/// appearance. Abrupt: contiguous class blocks. Gradual: each sample gets the
/// key rank + 2u (u uniform), so adjacent class blocks interleave with a
/// linearly shifting mixture.
inline std::vector<LabeledSample> reorder(std::vector<LabeledSample> samples, StreamOrder order, std::uint64_t seed) {
  if (order == StreamOrder::given) return samples;
  std::map<ClassLabel, std::size_t> rank;
  for (const auto& s : samples) rank.try_emplace(s.label, rank.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double width = order == StreamOrder::abrupt ? 0.999 : 2.0;
  std::vector<std::pair<double, std::size_t>> keys(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) keys[i] = {static_cast<double>(rank[samples[i].label]) + width * u(rng), i};
  std::sort(keys.begin(), keys.end());
  std::vector<LabeledSample> out;
  out.reserve(samples.size());
  for (const auto& [key, i] : keys) out.push_back(std::move(samples[i]));
  return out;
}

/// Cuts a sample sequence into chunks t = 1, 2, ...; the last chunk may be short.
inline std::vector<LabeledChunk> make_chunks(const std::vector<LabeledSample>& samples, std::size_t chunk_size) {
  if (chunk_size == 0) throw Error("chunk_size must be at least 1");
  std::vector<LabeledChunk> chunks;
  for (std::size_t start = 0; start < samples.size(); start += chunk_size) {
    LabeledChunk lc;
    lc.chunk.t = static_cast<int>(chunks.size()) + 1;
    const std::size_t end = std::min(samples.size(), start + chunk_size);
    for (std::size_t i = start; i < end; ++i) {
      lc.chunk.samples.push_back({i - start, samples[i].features});
      lc.truth.push_back(samples[i].label);
    }
    chunks.push_back(std::move(lc));
  }
  return chunks;
}

}  // namespace cdscal::harness
