#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ntfa/data.hpp"

namespace ntfa::inference {

using diff::Tensor;

struct KMeansResult {
  Tensor centers;     // K x 3
  Tensor log_widths;  // K: log of the weighted mean squared distance to the center
  std::vector<std::size_t> assignment;  // per point
};

/// Weighted Lloyd iterations on points (n x 3) seeded by a deterministic
/// weighted farthest-point pass that starts at the heaviest point.  Empty
/// clusters are re-seeded at the point with the largest weighted distance to
/// its current center.
KMeansResult weighted_kmeans(const Tensor& points, std::span<const double> weights,
                             std::size_t clusters, std::size_t max_iterations = 100);

/// Clusters the voxel grid with weights equal to the mean absolute signal of
/// each voxel over `trials`.
KMeansResult init_kmeans(const StudyDataset& dataset, std::span<const std::size_t> trials,
                         std::size_t factors);

}  // namespace ntfa::inference
