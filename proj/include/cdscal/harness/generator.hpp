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

// Seeded Gaussian-mixture stream generator driven by a JSON schedule.
//
//   {
//     "name": "syn-a", "dim": 2, "chunk_size": 1000, "chunks": 10, "seed": 7,
//     "classes": [
//       {"label": "A", "mean": [0, 0], "variance": [1, 1],
//        "drift": [0.1, 0], "start": 1, "end": 10, "weight": 1}
//     ]
//   }
//
// A class is active in chunks start..end (1-based, inclusive; "end" defaults
// to the last chunk). Its mean at chunk t is mean + drift * (t - start).
// Each chunk's samples are split over active classes in proportion to
// weight (largest remainder, ties to the earlier class) and shuffled.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "cdscal/harness/stream.hpp"

namespace cdscal::harness {

class SpecError : public Error {
 public:
  SpecError(const std::string& field, const std::string& what) : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ClassSchedule {
  ClassLabel label;
  Features mean;
  Features variance;
  Features drift;  // per-chunk mean shift
  int start = 1;
  int end = 0;
  double weight = 1.0;
};

struct GeneratorSpec {
  std::string name = "stream";
  std::size_t dim = 2;
  std::size_t chunk_size = 1000;
  int chunks = 1;
  std::uint64_t seed = 1;
  std::vector<ClassSchedule> classes;

  bool active(const ClassSchedule& c, int t) const { return t >= c.start && t <= c.end; }
  Features mean_at(const ClassSchedule& c, int t) const {
    Features m = c.mean;
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += c.drift[k] * static_cast<double>(t - c.start);
    return m;
  }
};

namespace detail {
inline Features read_vector(const nlohmann::json& j, const std::string& field, std::size_t dim) {
  if (!j.is_array()) throw SpecError(field, "expected an array of " + std::to_string(dim) + " numbers");
  if (j.size() != dim) throw SpecError(field, "expected " + std::to_string(dim) + " entries, found " + std::to_string(j.size()));
  Features v;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw SpecError(field + "[" + std::to_string(k) + "]", "expected a number");
    v.push_back(j[k].get<double>());
    if (!std::isfinite(v.back())) throw SpecError(field + "[" + std::to_string(k) + "]", "must be finite");
  }
  return v;
}

template <typename T>
T read_number(const nlohmann::json& obj, const std::string& key, const std::string& field, T fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw SpecError(field, "expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw SpecError(field, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.get<long long>() < 0) throw SpecError(field, "must be non-negative");
    }
  }
  return v.get<T>();
}
}  // namespace detail

/// Validates a schedule document. Errors name the offending field path, e.g. "classes[1].variance[0]".
inline GeneratorSpec parse_generator_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw SpecError("$", "spec must be a JSON object");
  GeneratorSpec s;
  if (j.contains("name")) {
    if (!j.at("name").is_string()) throw SpecError("name", "expected a string");
    s.name = j.at("name").get<std::string>();
  }
  s.dim = detail::read_number<std::size_t>(j, "dim", "dim", s.dim);
  if (s.dim == 0) throw SpecError("dim", "must be at least 1");
  s.chunk_size = detail::read_number<std::size_t>(j, "chunk_size", "chunk_size", s.chunk_size);
  if (s.chunk_size == 0) throw SpecError("chunk_size", "must be at least 1");
  s.chunks = detail::read_number<int>(j, "chunks", "chunks", s.chunks);
  if (s.chunks < 1) throw SpecError("chunks", "must be at least 1");
  s.seed = detail::read_number<std::uint64_t>(j, "seed", "seed", s.seed);

  if (!j.contains("classes") || !j.at("classes").is_array() || j.at("classes").empty())
    throw SpecError("classes", "expected a non-empty array");
  const auto& classes = j.at("classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string base = "classes[" + std::to_string(i) + "]";
    const auto& c = classes[i];
    if (!c.is_object()) throw SpecError(base, "expected an object");
    ClassSchedule cs;
    if (!c.contains("label") || !c.at("label").is_string() || c.at("label").get<std::string>().empty())
      throw SpecError(base + ".label", "expected a non-empty string");
    cs.label = c.at("label").get<std::string>();
    if (!c.contains("mean")) throw SpecError(base + ".mean", "missing");
    cs.mean = detail::read_vector(c.at("mean"), base + ".mean", s.dim);
    cs.variance = c.contains("variance") ? detail::read_vector(c.at("variance"), base + ".variance", s.dim)
                                         : Features(s.dim, 1.0);
    for (std::size_t k = 0; k < s.dim; ++k)
      if (!(cs.variance[k] > 0.0))
        throw SpecError(base + ".variance[" + std::to_string(k) + "]", "variance must be positive");
    cs.drift = c.contains("drift") ? detail::read_vector(c.at("drift"), base + ".drift", s.dim) : Features(s.dim, 0.0);
    cs.start = detail::read_number<int>(c, "start", base + ".start", 1);
    cs.end = detail::read_number<int>(c, "end", base + ".end", s.chunks);
    if (cs.start < 1) throw SpecError(base + ".start", "must be at least 1");
    if (cs.end < cs.start) throw SpecError(base + ".end", "must not precede start");
    cs.weight = detail::read_number<double>(c, "weight", base + ".weight", 1.0);
    if (!(cs.weight > 0.0)) throw SpecError(base + ".weight", "must be positive");
    s.classes.push_back(std::move(cs));
  }
  for (int t = 1; t <= s.chunks; ++t) {
    const bool any = std::any_of(s.classes.begin(), s.classes.end(), [&](const auto& c) { return s.active(c, t); });
    if (!any) throw SpecError("classes", "no class is active in chunk " + std::to_string(t));
  }
  return s;
}

/// Per-class sample counts for chunk t.
inline std::vector<std::size_t> class_counts(const GeneratorSpec& spec, int t) {
  std::vector<std::size_t> counts(spec.classes.size(), 0);
  double total = 0.0;
  for (const auto& c : spec.classes)
    if (spec.active(c, t)) total += c.weight;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) {
    if (!spec.active(spec.classes[i], t)) continue;
    const double exact = static_cast<double>(spec.chunk_size) * spec.classes[i].weight / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < spec.chunk_size; ++r, ++assigned) ++counts[remainders[r % remainders.size()].second];
  return counts;
}

/// Generates chunk after chunk from one seeded engine; deterministic per seed.
inline LabeledData generate_gaussian_stream(const GeneratorSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  LabeledData data;
  for (std::size_t k = 0; k < spec.dim; ++k) data.feature_names.push_back("f" + std::to_string(k));
  for (int t = 1; t <= spec.chunks; ++t) {
    const auto counts = class_counts(spec, t);
    std::vector<LabeledSample> chunk;
    chunk.reserve(spec.chunk_size);
    for (std::size_t i = 0; i < spec.classes.size(); ++i) {
      const auto& c = spec.classes[i];
      const Features mean = spec.mean_at(c, t);
      for (std::size_t s = 0; s < counts[i]; ++s) {
        LabeledSample x;
        x.label = c.label;
        x.features.resize(spec.dim);
        for (std::size_t k = 0; k < spec.dim; ++k) {
          std::normal_distribution<double> g(mean[k], std::sqrt(c.variance[k]));
          x.features[k] = g(rng);
        }
        chunk.push_back(std::move(x));
      }
    }
    std::shuffle(chunk.begin(), chunk.end(), rng);
    for (auto& x : chunk) data.samples.push_back(std::move(x));
  }
  return data;
}

}  // namespace cdscal::harness
