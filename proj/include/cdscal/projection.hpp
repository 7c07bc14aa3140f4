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

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "cdscal/core.hpp"

namespace cdscal {

using Point2 = std::array<double, 2>;

/// Top-2 principal directions of the chunk, each flipped so that its first
/// nonzero loading is positive. Columns of the returned m x 2 matrix.
inline Eigen::MatrixXd principal_axes(const Chunk& chunk, Eigen::VectorXd& mean) {
  const auto n = static_cast<Eigen::Index>(chunk.size());
  const auto m = static_cast<Eigen::Index>(chunk.dim());
  Eigen::MatrixXd x(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < m; ++k) x(i, k) = chunk.samples[static_cast<std::size_t>(i)].features[static_cast<std::size_t>(k)];
  mean = x.colwise().mean().transpose();
  x.rowwise() -= mean.transpose();
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues ascend; take the last two columns, largest first.
  Eigen::MatrixXd axes(m, 2);
  axes.col(0) = solver.eigenvectors().col(m - 1);
  axes.col(1) = solver.eigenvectors().col(m - 2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    for (Eigen::Index k = 0; k < m; ++k) {
      if (std::abs(axes(k, c)) > 1e-12) {
        if (axes(k, c) < 0) axes.col(c) *= -1.0;
        break;
      }
    }
  }
  return axes;
}

/// 2-D display coordinates for the requested samples: identity (zero-padded)
/// when m <= 2, otherwise centred projection onto the top-2 principal axes.
inline std::vector<Point2> project_2d(const Chunk& chunk, std::span<const SampleId> ids) {
  std::vector<Point2> out;
  out.reserve(ids.size());
  if (chunk.dim() <= 2) {
    for (const SampleId id : ids) {
      const auto& f = chunk.features(id);
      out.push_back({f.empty() ? 0.0 : f[0], f.size() > 1 ? f[1] : 0.0});
    }
    return out;
  }
  Eigen::VectorXd mean;
  const Eigen::MatrixXd axes = principal_axes(chunk, mean);
  for (const SampleId id : ids) {
    const auto& f = chunk.features(id);
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())) - mean;
    out.push_back({x.dot(axes.col(0)), x.dot(axes.col(1))});
  }
  return out;
}

}  // namespace cdscal
