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

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "cdscal/core.hpp"

namespace cdscal {

struct Prototype {
  enum class Source { subcluster, query };

  Features features;
  ClassLabel label;
  Source source = Source::subcluster;
};

using PrototypeSet = std::vector<Prototype>;

/// Sub-cluster centers followed by the queried samples. A sub-cluster center
/// equal to a queried sample is dropped in favour of the query.
inline PrototypeSet assemble_prototypes(const StreamSummary& summary, const QueryBatch& queries,
                                        const LabeledBatch& labels, const Chunk& chunk) {
  const auto ids = queries.all();
  PrototypeSet out;
  for (const auto& s : summary.subclusters) {
    const bool shadowed =
        std::any_of(ids.begin(), ids.end(), [&](SampleId id) { return chunk.features(id) == s.center; });
    if (!shadowed) out.push_back({s.center, s.label, Prototype::Source::subcluster});
  }
  for (const SampleId id : ids) {
    const auto it = labels.labels.find(id);
    if (it == labels.labels.end()) throw Error("assemble_prototypes: no label for queried sample " + std::to_string(id));
    out.push_back({chunk.features(id), it->second, Prototype::Source::query});
  }
  if (out.empty()) throw NoPrototypesError("no prototypes: empty summary and no labelled queries");
  return out;
}

/// Majority vote over the k nearest prototypes. Neighbour distance ties go to
/// the earlier prototype; vote ties go to the tied label whose nearest
/// prototype ranks first.
inline LabeledBatch knn_propagate(const PrototypeSet& prototypes, const Chunk& chunk, const QueryBatch& queries,
                                  const LabeledBatch& labels, std::size_t k = 5) {
  if (prototypes.empty()) throw NoPrototypesError("knn_propagate: empty prototype set");
  if (k == 0) throw Error("knn_propagate: k must be positive");

  std::unordered_map<ClassLabel, std::size_t> intern;
  std::vector<std::size_t> proto_label(prototypes.size());
  std::vector<const ClassLabel*> names;
  for (std::size_t p = 0; p < prototypes.size(); ++p) {
    auto [it, inserted] = intern.try_emplace(prototypes[p].label, names.size());
    if (inserted) names.push_back(&it->first);
    proto_label[p] = it->second;
  }

  const std::size_t kk = std::min(k, prototypes.size());
  std::vector<std::pair<double, std::size_t>> dist(prototypes.size());
  std::vector<std::size_t> votes(names.size(), 0);

  LabeledBatch out;
  for (const auto& s : chunk.samples) {
    for (std::size_t p = 0; p < prototypes.size(); ++p)
      dist[p] = {squared_distance(s.features, prototypes[p].features), p};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());

    std::fill(votes.begin(), votes.end(), 0);
    std::size_t top = 0;
    for (std::size_t i = 0; i < kk; ++i) top = std::max(top, ++votes[proto_label[dist[i].second]]);
    std::size_t winner = 0;
    for (std::size_t i = 0; i < kk; ++i) {
      const std::size_t l = proto_label[dist[i].second];
      if (votes[l] == top) {
        winner = l;
        break;
      }
    }
    out.labels.emplace(s.id, *names[winner]);
  }
  for (const SampleId id : queries.all()) out.labels[id] = labels.labels.at(id);
  return out;
}

}  // namespace cdscal
