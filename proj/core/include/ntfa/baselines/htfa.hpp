#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ntfa/data.hpp"
#include "ntfa/diff/binding.hpp"
#include "ntfa/inference/fit.hpp"
#include "ntfa/inference/variational.hpp"

namespace ntfa::baselines {

using diff::Tensor;
using inference::NormalParams;

/// Fixed prior scales of the hierarchical model.
struct HtfaHyper {
  double template_center_log_scale = 1.0;  // template centers around the K-means centers
  double template_width_log_scale = 0.0;   // template log-widths around the K-means widths
  double trial_center_log_scale = 0.0;     // trial centers around the template
  double trial_width_log_scale = -1.0;     // trial log-widths around the template
  double weight_log_scale = 0.0;           // weights ~ N(0, 1)
};

/// Variational state of the hierarchical baseline plus its fixed priors.
struct HtfaState {
  std::size_t factors = 0;
  HtfaHyper hyper;
  Tensor prior_centers;     // K x 3, template prior means
  Tensor prior_log_widths;  // K
  NormalParams template_centers;     // K x 3
  NormalParams template_log_widths;  // K
  std::vector<NormalParams> centers;     // K x 3 per trial
  std::vector<NormalParams> log_widths;  // K per trial
  std::vector<NormalParams> weights;     // T x K per trial
  /// Observation noise, learned with the generative learning rate and not
  /// part of the variational count.
  Tensor log_sigma_y = Tensor::scalar(0.0);

  std::vector<Tensor*> variational_tensors();
  std::vector<const Tensor*> variational_tensors() const;
  /// 2(3K + K) + N 2(3K + K) + 2 N T K.
  std::size_t parameter_count() const;
};

struct HtfaFit {
  HtfaState state;
  std::vector<double> loss_trace;
};

/// Importance-weighted bound of the hierarchical model on a batch.  The
/// template terms are scaled by |batch| / `train_size`.
diff::Var htfa_bound(diff::Binding& bind, const HtfaState& state, const StudyDataset& dataset,
                     std::span<const std::size_t> batch, std::size_t train_size,
                     std::size_t particles, Rng& rng);

/// Trains the hierarchical baseline on `train` with the same optimizer,
/// schedule and batching as the neural model.
HtfaFit htfa_fit(const StudyDataset& dataset, std::span<const std::size_t> train,
                 std::size_t factors, const inference::TrainConfig& config,
                 const HtfaHyper& hyper = {},
                 const inference::EpochCallback& on_epoch = {});

/// Predictive bound shared by every held-out trial: geometry drawn around the
/// template posterior means with the trial-level prior scales, weights from
/// N(0, 1); the particle mean of the log-likelihood, summed over trials.  Every
/// trial replays the same random stream, so trials with equal data and length
/// get equal contributions.
double htfa_log_predictive(const HtfaState& state, const StudyDataset& dataset,
                           std::span<const std::size_t> test, std::size_t particles,
                           std::uint64_t seed, std::vector<double>* per_trial = nullptr);

}  // namespace ntfa::baselines
