#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ntfa/diff/tensor.hpp"

namespace ntfa {

using diff::Tensor;

enum class BlockType { task, rest };

const char* to_string(BlockType block);
BlockType block_from_string(const std::string& text);

/// Voxel positions, V x 3, in one consistent spatial unit.
struct VoxelGrid {
  Tensor coords;

  std::size_t size() const { return coords.empty() ? 0 : coords.rows(); }
};

/// One continuous recording segment: T x V samples for a participant/stimulus pair.
struct Trial {
  std::size_t participant = 0;
  std::size_t stimulus = 0;
  std::size_t run = 0;
  BlockType block = BlockType::task;
  Tensor data;

  std::size_t time_points() const { return data.rows(); }
};

struct StudyDataset {
  std::size_t num_participants = 0;
  std::size_t num_stimuli = 0;
  VoxelGrid grid;
  std::vector<Trial> trials;
  /// Optional display/category labels, indexed by participant/stimulus.
  std::vector<std::string> participant_labels;
  std::vector<std::string> stimulus_labels;

  std::size_t voxels() const { return grid.size(); }

  /// Number of stimuli referenced by task trials (max task stimulus index + 1).
  std::size_t num_task_stimuli() const;

  /// Checks index ranges, shared V, finite values.  Throws ContractError.
  void validate() const;

  std::vector<std::size_t> all_trials() const;
};

/// How many of `trials` touch each participant and stimulus.
struct TrialCoverage {
  std::vector<std::size_t> participant;
  std::vector<std::size_t> stimulus;
};

TrialCoverage count_coverage(const StudyDataset& dataset, std::span<const std::size_t> trials);

}  // namespace ntfa
