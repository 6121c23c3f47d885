#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ntfa/data.hpp"
#include "ntfa/diff/binding.hpp"
#include "ntfa/diff/ops.hpp"
#include "ntfa/model/params.hpp"

namespace ntfa::model {

using diff::Binding;
using diff::Var;

// --- conditioning networks ------------------------------------------------

/// Distribution parameters for one participant's factor geometry.
struct FactorPriorVars {
  Var center_mean;       // K x 3
  Var center_log_scale;  // K x 3
  Var width_mean;        // K
  Var width_log_scale;   // K
};

struct WeightPriorVars {
  Var mean;       // K
  Var log_scale;  // K
};

Var mlp_forward(Binding& bind, const Mlp& net, Var input);

FactorPriorVars eta_f_forward(Binding& bind, const GenerativeParams& params, Var z_p);
WeightPriorVars eta_w_forward(Binding& bind, const GenerativeParams& params, Var z_p, Var z_s);

struct FactorPrior {
  Tensor center_mean;
  Tensor center_log_scale;
  Tensor width_mean;
  Tensor width_log_scale;
};

struct WeightPrior {
  Tensor mean;
  Tensor log_scale;
};

FactorPrior eta_f_forward(const GenerativeParams& params, const Tensor& z_p);
WeightPrior eta_w_forward(const GenerativeParams& params, const Tensor& z_p, const Tensor& z_s);

// --- factors and likelihood ----------------------------------------------

/// F[k, v] = exp(-|x_v - c_k|^2 / exp(rho_k)).
Var rbf_factor_matrix(Var centers, Var log_widths, const VoxelGrid& grid);
Tensor rbf_factor_matrix(const Tensor& centers, const Tensor& log_widths, const VoxelGrid& grid);

/// Sum over (t, v) of log N(Y[t, v]; (W F)[t, v], exp(log_sigma_y)).  Shared by
/// every model in the library.
Var log_likelihood(const Tensor& y, Var weights, Var factors, Var log_sigma_y);
double log_likelihood(const Tensor& y, const Tensor& weights, const Tensor& factors,
                      double log_sigma_y);

// --- joint density --------------------------------------------------------

/// Values of every latent variable, indexed by participant / stimulus / trial.
/// Entries for ids outside the slice of interest may be left empty.
struct StudyLatents {
  std::vector<Tensor> participant_embeddings;  // D each
  std::vector<Tensor> stimulus_embeddings;     // D each
  std::vector<Tensor> centers;                 // K x 3 per participant
  std::vector<Tensor> log_widths;              // K per participant
  std::vector<Tensor> weights;                 // T x K per trial
};

/// Graph-level latents; unset entries are treated as missing.
struct LatentVars {
  std::vector<std::optional<Var>> participant_embeddings;
  std::vector<std::optional<Var>> stimulus_embeddings;
  std::vector<std::optional<Var>> centers;
  std::vector<std::optional<Var>> log_widths;
  std::vector<std::optional<Var>> weights;
};

/// Per-latent multipliers for the participant- and stimulus-level terms.  An
/// empty vector means weight 1 everywhere.
struct TermWeights {
  std::vector<double> participant;
  std::vector<double> stimulus;
};

struct JointOptions {
  bool include_likelihood = true;
  const TermWeights* weights = nullptr;
};

/// log p(Y, W, x, rho, z_p, z_s) restricted to `trials`: standard-normal
/// embedding priors of the participants/stimuli they touch, factor geometry
/// under the factor network, weights under the weight network, likelihood.
Var log_joint(Binding& bind, const GenerativeParams& params, const StudyDataset& dataset,
              std::span<const std::size_t> trials, const LatentVars& latents,
              const JointOptions& options = {});

double log_joint(const StudyDataset& dataset, std::span<const std::size_t> trials,
                 const StudyLatents& latents, const GenerativeParams& params);

// --- ancestral sampling ---------------------------------------------------

struct PlannedTrial {
  std::size_t participant = 0;
  std::size_t stimulus = 0;
  std::size_t time_points = 1;
};

struct GeneratedStudy {
  StudyDataset dataset;
  StudyLatents latents;
};

/// Draws embeddings, per-participant factor geometry, per-time-point weights
/// and data from the generative model.  Each participant's geometry is drawn
/// once and shared by all of their trials.
GeneratedStudy sample_generative(const GenerativeParams& params, const VoxelGrid& grid,
                                 std::span<const PlannedTrial> plan, std::uint64_t seed);

}  // namespace ntfa::model
