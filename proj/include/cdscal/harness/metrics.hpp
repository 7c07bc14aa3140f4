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

#include <map>
#include <span>

#include "cdscal/core.hpp"

namespace cdscal::harness {

namespace detail {
struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
};

// Only classes present in truth get an entry; predictions of other classes
// still count as false negatives for the true class.
inline std::map<ClassLabel, ClassCounts> confusion(std::span<const ClassLabel> truth,
                                                   std::span<const ClassLabel> predicted) {
  if (truth.empty()) throw Error("metrics: empty evaluation set");
  if (truth.size() != predicted.size()) throw Error("metrics: truth and predictions differ in size");
  std::map<ClassLabel, ClassCounts> counts;
  for (const auto& y : truth) counts[y];
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) {
      ++counts[truth[i]].tp;
    } else {
      ++counts[truth[i]].fn;
      if (auto it = counts.find(predicted[i]); it != counts.end()) ++it->second.fp;
    }
  }
  return counts;
}
}  // namespace detail

/// Mean per-class recall over classes present in truth.
inline double balanced_accuracy(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted) {
  const auto counts = detail::confusion(truth, predicted);
  double sum = 0.0;
  for (const auto& [label, c] : counts) sum += static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return sum / static_cast<double>(counts.size());
}

/// Mean per-class F1 over classes present in truth.
inline double macro_f(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted) {
  const auto counts = detail::confusion(truth, predicted);
  double sum = 0.0;
  for (const auto& [label, c] : counts) {
    // F1 = 2TP / (2TP + FP + FN); zero when there are no true positives.
    if (c.tp == 0) continue;
    sum += 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
  }
  return sum / static_cast<double>(counts.size());
}

}  // namespace cdscal::harness
