#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ntfa/diff/binding.hpp"
#include "ntfa/inference/fit.hpp"
#include "ntfa/rng.hpp"

namespace ntfa::inference {

/// Builds the bound of one batch on a fresh graph.  Every tensor the
/// objective reads through the binding must be listed as a generative or a
/// variational target.
using BatchObjective =
    std::function<diff::Var(diff::Binding&, std::span<const std::size_t>, Rng&)>;

struct OptimizeTargets {
  std::vector<Tensor*> generative;   // stepped with lr_theta
  std::vector<Tensor*> variational;  // stepped with lr_lambda
};

/// Maximizes the objective over shuffled batches of `train` for
/// config.epochs epochs and returns the per-epoch mean negative bound.  A
/// non-finite bound is re-evaluated trial by trial to name the culprit in
/// the NumericalError; `describe` renders a trial index for that message.
std::vector<double> optimize_bound(std::span<const std::size_t> train, const TrainConfig& config,
                                   const OptimizeTargets& targets,
                                   const BatchObjective& objective, Rng& rng,
                                   const std::function<std::string(std::size_t)>& describe,
                                   const EpochCallback& on_epoch = {});

}  // namespace ntfa::inference
