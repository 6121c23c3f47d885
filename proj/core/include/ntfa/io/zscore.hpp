#pragma once

#include <span>
#include <vector>

#include "ntfa/data.hpp"

namespace ntfa::io {

/// Per-voxel mean and population standard deviation pooled over every time
/// point of every rest trial.
struct RestStatistics {
  std::vector<double> mean;
  std::vector<double> sd;
};

/// Throws ContractError when `trials` holds no rest trial.
RestStatistics rest_statistics(std::span<const Trial> trials);

/// (y - mean) / sd per voxel; voxels with sd == 0 map to 0.
Tensor apply_zscore(const Tensor& data, const RestStatistics& stats);

/// Normalizes the task trials of one run against the run's rest trials.
std::vector<Trial> zscore_to_rest(std::span<const Trial> run_trials);

/// Applies zscore_to_rest run by run.  Rest trials are normalized with the
/// same statistics and kept when `keep_rest` is set.
StudyDataset zscore_dataset(const StudyDataset& dataset, bool keep_rest = true);

}  // namespace ntfa::io
