#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ntfa/data.hpp"
#include "ntfa/inference/kmeans.hpp"
#include "ntfa/inference/variational.hpp"
#include "ntfa/model/params.hpp"

namespace ntfa::inference {

struct TrainConfig {
  double lr_lambda = 0.01;
  double lr_theta = 1e-4;
  std::size_t epochs = 1500;
  std::size_t patience = 100;
  double decay = 0.5;
  std::size_t particles = 1;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;

  /// Throws ContractError when a field is out of range.
  void validate() const;
};

struct FitResult {
  model::GenerativeParams params;
  VariationalState state;
  /// Mean over the epoch's batches of the negative bound, one per epoch.
  std::vector<double> loss_trace;
};

/// Called after every epoch with (epoch index, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

/// Same initialization as `fit` with zero epochs: the noise scale starts at
/// the standard deviation of the training data, the factor network's output
/// bias and the variational geometry at the K-means solution.
FitResult initialize_fit(const StudyDataset& dataset, std::span<const std::size_t> train,
                         const TrainConfig& config, const model::GenerativeConfig& gen,
                         Rng& rng);

/// Stochastic optimization of the importance-weighted bound over shuffled
/// batches of `train`, with separate Adam optimizers for the generative
/// parameters and the variational parameters and a plateau schedule on both
/// learning rates.  Throws NumericalError naming the first trial whose bound
/// is not finite.
FitResult fit(const StudyDataset& dataset, std::span<const std::size_t> train,
              const TrainConfig& config, const model::GenerativeConfig& gen,
              const EpochCallback& on_epoch = {});

/// Trains on every trial.
FitResult fit(const StudyDataset& dataset, const TrainConfig& config,
              const model::GenerativeConfig& gen, const EpochCallback& on_epoch = {});

}  // namespace ntfa::inference
