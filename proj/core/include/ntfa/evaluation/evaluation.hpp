#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ntfa/data.hpp"
#include "ntfa/inference/variational.hpp"
#include "ntfa/model/params.hpp"

namespace ntfa::evaluation {

using diff::Tensor;

struct SplitPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Diagonal held-out split over the task trials: trial n is held out when
/// participant_n mod S == stimulus_n, with S the number of task stimuli.
/// Rest trials always stay in training.  Throws ContractError when P < 2 or
/// S < 2, or when some participant or stimulus ends up without a training
/// trial.
SplitPlan heldout_split(const StudyDataset& dataset);

struct PredictiveBound {
  double total = 0.0;
  std::vector<double> per_trial;  // aligned with the requested test trials
};

/// Posterior-predictive lower bound summed over `test`.  For each trial and
/// each of L particles, the embeddings are drawn from q and the factor
/// geometry and weights from the generative prior given those embeddings;
/// the trial's contribution is the particle mean of log p(Y | W, F).  The
/// random stream of trial n depends only on (seed, n).
PredictiveBound log_predictive_bound(const model::GenerativeParams& params,
                                     const inference::VariationalState& q,
                                     const StudyDataset& dataset,
                                     std::span<const std::size_t> test, std::size_t particles,
                                     std::uint64_t seed);

/// Time-averaged predictive mean (length V) for a participant/stimulus pair:
/// the variational embedding means pushed through the network means.
Tensor posterior_predictive_mean(const model::GenerativeParams& params,
                                 const inference::VariationalState& q, const VoxelGrid& grid,
                                 std::size_t participant, std::size_t stimulus);

enum class ModelKind { ntfa, htfa };

const char* to_string(ModelKind kind);

struct CountConfig {
  std::size_t participants = 1;  // P
  std::size_t stimuli = 1;       // S
  std::size_t trials = 1;        // N
  std::size_t time_points = 1;   // T
  std::size_t factors = 1;       // K
  std::size_t embedding_dim = 1; // D
};

/// Learnable values of each model.  NTFA: both networks, their PReLU slopes,
/// the noise scale, and the variational state.  HTFA: the template, per-trial
/// geometry and per-time-point weights posteriors.
std::size_t parameter_count(ModelKind kind, const CountConfig& config);

}  // namespace ntfa::evaluation
