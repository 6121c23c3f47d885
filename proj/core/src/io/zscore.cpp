#include "ntfa/io/zscore.hpp"

#include <cmath>
#include <map>

#include "ntfa/error.hpp"

namespace ntfa::io {

RestStatistics rest_statistics(std::span<const Trial> trials) {
  std::size_t v_count = 0;
  double count = 0.0;
  RestStatistics s;
  for (const Trial& t : trials) {
    if (t.block != BlockType::rest) continue;
    if (s.mean.empty()) {
      v_count = t.data.cols();
      s.mean.assign(v_count, 0.0);
      s.sd.assign(v_count, 0.0);
    }
    if (t.data.cols() != v_count) throw DimensionError("zscore: rest trials differ in V");
    for (std::size_t r = 0; r < t.data.rows(); ++r) {
      for (std::size_t v = 0; v < v_count; ++v) s.mean[v] += t.data.at(r, v);
    }
    count += static_cast<double>(t.data.rows());
  }
  if (count == 0.0) throw ContractError("zscore: run has no rest trials");
  for (double& m : s.mean) m /= count;
  for (const Trial& t : trials) {
    if (t.block != BlockType::rest) continue;
    for (std::size_t r = 0; r < t.data.rows(); ++r) {
      for (std::size_t v = 0; v < v_count; ++v) {
        const double d = t.data.at(r, v) - s.mean[v];
        s.sd[v] += d * d;
      }
    }
  }
  for (double& sd : s.sd) sd = std::sqrt(sd / count);
  return s;
}

Tensor apply_zscore(const Tensor& data, const RestStatistics& stats) {
  if (data.rank() != 2 || data.cols() != stats.mean.size()) {
    throw DimensionError("zscore: trial width differs from the rest statistics");
  }
  Tensor out(data.shape(), 0.0);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t v = 0; v < data.cols(); ++v) {
      out.at(r, v) = stats.sd[v] > 0.0 ? (data.at(r, v) - stats.mean[v]) / stats.sd[v] : 0.0;
    }
  }
  return out;
}

std::vector<Trial> zscore_to_rest(std::span<const Trial> run_trials) {
  const RestStatistics stats = rest_statistics(run_trials);
  std::vector<Trial> out;
  for (const Trial& t : run_trials) {
    if (t.block != BlockType::task) continue;
    Trial z = t;
    z.data = apply_zscore(t.data, stats);
    out.push_back(std::move(z));
  }
  return out;
}

StudyDataset zscore_dataset(const StudyDataset& dataset, bool keep_rest) {
  dataset.validate();
  std::map<std::size_t, std::vector<Trial>> runs;
  for (const Trial& t : dataset.trials) runs[t.run].push_back(t);
  std::map<std::size_t, RestStatistics> stats;
  for (const auto& [run, trials] : runs) stats.emplace(run, rest_statistics(trials));
  StudyDataset out = dataset;
  out.trials.clear();
  for (const Trial& t : dataset.trials) {
    if (t.block == BlockType::rest && !keep_rest) continue;
    Trial z = t;
    z.data = apply_zscore(t.data, stats.at(t.run));
    out.trials.push_back(std::move(z));
  }
  return out;
}

}  // namespace ntfa::io
