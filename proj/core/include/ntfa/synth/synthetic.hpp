#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ntfa/data.hpp"

namespace ntfa::synth {

using diff::Tensor;

/// Ground-truth design of a synthetic study with planted participant groups
/// and stimulus categories.  Covariances are diagonal and given as standard
/// deviations per embedding dimension.
struct SynthDesign {
  std::size_t groups = 3;                  // G
  std::size_t participants_per_group = 3;  // N_G
  std::size_t categories = 2;              // C
  std::size_t stimuli_per_category = 4;    // N_C
  std::size_t time_points = 20;            // T per block
  std::size_t voxels = 5000;               // V

  std::vector<std::vector<double>> stimulus_means;     // C x D
  std::vector<std::vector<double>> stimulus_sd;        // C x D
  std::vector<std::vector<double>> participant_means;  // G x D
  std::vector<std::vector<double>> participant_sd;     // G x D

  std::vector<std::array<double, 3>> centers;  // K factor centers, grid coordinates
  double width_mean = 0.0;                     // mu^rho
  double width_sd = 0.1;                       // sigma^rho
  double weight_sd = 0.5;                      // sigma^W
  /// Observation noise added to Y = W F.
  double noise_sd = 0.5;
  /// Scale of a per-time-point gain shared by all factors of a task block:
  /// task weights are z_p.z_s (1 + task_gain_sd u_t) + sigma^W e.  Zero gives
  /// independent weights around z_p.z_s.
  double task_gain_sd = 0.35;
  std::uint64_t seed = 0;

  static SynthDesign defaults();

  std::size_t embedding_dim() const;
  std::size_t factors() const { return centers.size(); }
  std::size_t participants() const { return groups * participants_per_group; }
  std::size_t task_stimuli() const { return categories * stimuli_per_category; }
  /// Task blocks plus the interleaved rest blocks of one participant.
  std::size_t blocks_per_participant() const { return 2 * task_stimuli() + 1; }

  /// Throws ContractError for inconsistent sizes, negative scales or V < K.
  void validate() const;
};

/// Integer lattice filling the smallest cube holding V points, centered at the
/// origin, truncated to its first V points in lexicographic order.
VoxelGrid make_voxel_grid(std::size_t voxels);

struct DesignEmbeddings {
  std::vector<Tensor> participants;  // D each, group-major order
  std::vector<Tensor> stimuli;       // D each, category-major order
};

DesignEmbeddings sample_design_embeddings(const SynthDesign& design, std::uint64_t seed);

/// Planted latents of a generated study.
struct GroundTruth {
  std::vector<Tensor> participant_embeddings;
  /// Task stimuli followed by the rest stimulus, whose embedding is zero.
  std::vector<Tensor> stimulus_embeddings;
  Tensor centers;     // K x 3
  Tensor log_widths;  // K
  std::vector<Tensor> weights;  // T x K per trial
  std::vector<std::size_t> participant_group;
  /// Category per stimulus; the rest stimulus gets `categories`.
  std::vector<std::size_t> stimulus_category;
  std::vector<std::string> category_names;
};

struct SyntheticStudy {
  StudyDataset dataset;
  GroundTruth truth;
};

/// Generates one block per trial.  Each participant sees rest, task, rest,
/// task, ..., rest, with task stimuli alternating between categories; every
/// rest block uses one shared rest stimulus with index C * N_C.  The run id of
/// a trial is its participant index.
SyntheticStudy generate_synthetic(const SynthDesign& design);

}  // namespace ntfa::synth
