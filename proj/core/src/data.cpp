#include "ntfa/data.hpp"

#include <numeric>

#include "ntfa/error.hpp"

namespace ntfa {

const char* to_string(BlockType block) { return block == BlockType::task ? "task" : "rest"; }

BlockType block_from_string(const std::string& text) {
  if (text == "task") return BlockType::task;
  if (text == "rest") return BlockType::rest;
  throw FormatError("unknown block type '" + text + "'");
}

std::size_t StudyDataset::num_task_stimuli() const {
  std::size_t s = 0;
  for (const Trial& t : trials) {
    if (t.block == BlockType::task) s = std::max(s, t.stimulus + 1);
  }
  return s;
}

void StudyDataset::validate() const {
  const std::size_t v = voxels();
  if (grid.coords.rank() != 2 || grid.coords.cols() != 3) {
    throw ContractError("dataset: voxel grid must be V x 3");
  }
  if (!grid.coords.all_finite()) throw ContractError("dataset: non-finite voxel coordinate");
  for (std::size_t n = 0; n < trials.size(); ++n) {
    const Trial& t = trials[n];
    const std::string where = "dataset: trial " + std::to_string(n);
    if (t.participant >= num_participants) throw ContractError(where + ": participant out of range");
    if (t.stimulus >= num_stimuli) throw ContractError(where + ": stimulus out of range");
    if (t.data.rank() != 2 || t.data.cols() != v) {
      throw ContractError(where + ": data must be T x " + std::to_string(v));
    }
    if (t.data.rows() == 0) throw ContractError(where + ": no time points");
    if (!t.data.all_finite()) throw ContractError(where + ": non-finite sample");
  }
}

std::vector<std::size_t> StudyDataset::all_trials() const {
  std::vector<std::size_t> out(trials.size());
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

TrialCoverage count_coverage(const StudyDataset& dataset, std::span<const std::size_t> trials) {
  TrialCoverage c;
  c.participant.assign(dataset.num_participants, 0);
  c.stimulus.assign(dataset.num_stimuli, 0);
  for (std::size_t n : trials) {
    const Trial& t = dataset.trials.at(n);
    ++c.participant.at(t.participant);
    ++c.stimulus.at(t.stimulus);
  }
  return c;
}

}  // namespace ntfa
