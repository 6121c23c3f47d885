#include "ntfa/inference/fit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ntfa/error.hpp"
#include "ntfa/inference/bound.hpp"
#include "ntfa/inference/optimize.hpp"

namespace ntfa::inference {

void TrainConfig::validate() const {
  if (!(lr_lambda > 0.0) || !(lr_theta > 0.0)) {
    throw ContractError("train config: learning rates must be positive");
  }
  if (patience < 1) throw ContractError("train config: patience must be >= 1");
  if (!(decay > 0.0 && decay < 1.0)) throw ContractError("train config: decay must be in (0, 1)");
  if (particles < 1) throw ContractError("train config: particles must be >= 1");
  if (batch_size < 1) throw ContractError("train config: batch size must be >= 1");
}

namespace {

void check_training_set(const StudyDataset& dataset, std::span<const std::size_t> train) {
  dataset.validate();
  if (train.empty()) throw ContractError("fit: empty training set");
  for (std::size_t n : train) {
    if (n >= dataset.trials.size()) {
      throw ContractError("fit: training index " + std::to_string(n) + " out of range");
    }
  }
  const TrialCoverage cov = count_coverage(dataset, train);
  for (std::size_t p = 0; p < cov.participant.size(); ++p) {
    if (cov.participant[p] == 0) {
      throw ContractError("fit: participant " + std::to_string(p) + " has no training trial");
    }
  }
  for (std::size_t s = 0; s < cov.stimulus.size(); ++s) {
    if (cov.stimulus[s] == 0) {
      throw ContractError("fit: stimulus " + std::to_string(s) + " has no training trial");
    }
  }
}

double data_log_std(const StudyDataset& dataset, std::span<const std::size_t> train) {
  double sum = 0.0;
  double sum_sq = 0.0;
  double count = 0.0;
  for (std::size_t n : train) {
    for (double y : dataset.trials[n].data.values()) {
      sum += y;
      sum_sq += y * y;
      count += 1.0;
    }
  }
  const double mean = sum / count;
  const double var = std::max(sum_sq / count - mean * mean, 1e-12);
  return 0.5 * std::log(var);
}

std::string describe_trial(const StudyDataset& dataset, std::size_t n) {
  const Trial& t = dataset.trials[n];
  return "trial " + std::to_string(n) + " (participant " + std::to_string(t.participant) +
         ", stimulus " + std::to_string(t.stimulus) + ")";
}

}  // namespace

FitResult initialize_fit(const StudyDataset& dataset, std::span<const std::size_t> train,
                         const TrainConfig& config, const model::GenerativeConfig& gen,
                         Rng& rng) {
  config.validate();
  gen.validate();
  check_training_set(dataset, train);
  if (gen.factors > dataset.voxels()) throw ContractError("fit: more factors than voxels");
  FitResult out{model::GenerativeParams::initialize(gen, rng, data_log_std(dataset, train)),
                VariationalState{}, {}};
  const KMeansResult km = init_kmeans(dataset, train, gen.factors);
  out.params.seed_factor_bias(km.centers, km.log_widths, 0.0, -1.0);
  out.state = VariationalState::initialize(dataset, gen, km.centers, km.log_widths, rng);
  return out;
}

FitResult fit(const StudyDataset& dataset, std::span<const std::size_t> train,
              const TrainConfig& config, const model::GenerativeConfig& gen,
              const EpochCallback& on_epoch) {
  Rng rng(config.seed);
  FitResult result = initialize_fit(dataset, train, config, gen, rng);
  if (config.epochs == 0) return result;
  const TrialCoverage coverage = count_coverage(dataset, train);
  const BoundOptions options{config.particles, true};
  const BatchObjective objective = [&](diff::Binding& bind, std::span<const std::size_t> batch,
                                       Rng& r) {
    return elbo_iwae(bind, result.params, result.state, dataset, batch, coverage, options, r);
  };
  result.loss_trace = optimize_bound(
      train, config, OptimizeTargets{result.params.tensors(), result.state.tensors()}, objective,
      rng, [&](std::size_t n) { return describe_trial(dataset, n); }, on_epoch);
  return result;
}

FitResult fit(const StudyDataset& dataset, const TrainConfig& config,
              const model::GenerativeConfig& gen, const EpochCallback& on_epoch) {
  const std::vector<std::size_t> all = dataset.all_trials();
  return fit(dataset, all, config, gen, on_epoch);
}

}  // namespace ntfa::inference
