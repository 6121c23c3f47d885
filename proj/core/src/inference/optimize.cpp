#include "ntfa/inference/optimize.hpp"

#include <algorithm>
#include <unordered_map>

#include "ntfa/diff/adam.hpp"
#include "ntfa/diff/ops.hpp"
#include "ntfa/error.hpp"
#include "ntfa/inference/schedule.hpp"

namespace ntfa::inference {

std::vector<double> optimize_bound(std::span<const std::size_t> train, const TrainConfig& config,
                                   const OptimizeTargets& targets,
                                   const BatchObjective& objective, Rng& rng,
                                   const std::function<std::string(std::size_t)>& describe,
                                   const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty()) throw ContractError("optimize: empty training set");
  struct Target {
    Tensor* tensor;
    bool generative;
    std::size_t slot;
  };
  std::unordered_map<const Tensor*, Target> lookup;
  for (std::size_t i = 0; i < targets.generative.size(); ++i) {
    lookup.emplace(targets.generative[i], Target{targets.generative[i], true, i});
  }
  for (std::size_t i = 0; i < targets.variational.size(); ++i) {
    lookup.emplace(targets.variational[i], Target{targets.variational[i], false, i});
  }
  diff::Adam adam_theta(config.lr_theta);
  diff::Adam adam_lambda(config.lr_lambda);
  PlateauSchedule schedule(config.patience, config.decay);
  std::vector<std::size_t> order(train.begin(), train.end());
  std::vector<double> trace;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const std::string where = "at epoch " + std::to_string(epoch);
      diff::Graph g;
      diff::Binding bind(g, true);
      const Rng rng_before = rng;
      diff::Var loss;
      try {
        loss = diff::neg(objective(bind, batch, rng));
      } catch (const NumericalError& err) {
        for (std::size_t n : batch) {
          diff::Graph probe_graph;
          diff::Binding probe(probe_graph, false);
          Rng probe_rng = rng_before;
          const std::size_t one[] = {n};
          try {
            objective(probe, one, probe_rng);
          } catch (const NumericalError&) {
            throw NumericalError("non-finite bound " + where + " for " + describe(n));
          }
        }
        throw NumericalError("non-finite bound " + where + " in batch starting with " +
                             describe(batch[0]) + ": " + err.what());
      }
      g.backward(loss);
      for (const auto& [key, var] : bind.entries()) {
        const auto it = lookup.find(key);
        if (it == lookup.end()) continue;
        const Target& target = it->second;
        const Tensor grad = g.grad(var);
        if (!grad.all_finite()) {
          throw NumericalError("non-finite gradient " + where + " in batch starting with " +
                               describe(batch[0]));
        }
        (target.generative ? adam_theta : adam_lambda).step(target.slot, *target.tensor, grad);
      }
      total += loss.item();
      ++batches;
    }
    const double mean_loss = total / static_cast<double>(batches);
    trace.push_back(mean_loss);
    const double multiplier = schedule.observe(mean_loss);
    if (multiplier != 1.0) {
      adam_theta.set_lr(adam_theta.lr() * multiplier);
      adam_lambda.set_lr(adam_lambda.lr() * multiplier);
    }
    if (on_epoch) on_epoch(epoch, mean_loss);
  }
  return trace;
}

}  // namespace ntfa::inference
