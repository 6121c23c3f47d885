#pragma once

#include <cstddef>
#include <vector>

#include "ntfa/data.hpp"
#include "ntfa/model/params.hpp"
#include "ntfa/rng.hpp"

namespace ntfa::inference {

using diff::Tensor;

/// Mean and unconstrained log-scale of a diagonal Gaussian.
struct NormalParams {
  Tensor mean;
  Tensor log_scale;

  static NormalParams filled(diff::Shape shape, double mean, double log_scale);
};

/// Fully factorized Gaussian posterior over every NTFA latent.
struct VariationalState {
  std::vector<NormalParams> participant_embeddings;  // D
  std::vector<NormalParams> stimulus_embeddings;     // D
  std::vector<NormalParams> centers;                 // K x 3 per participant
  std::vector<NormalParams> log_widths;              // K per participant
  std::vector<NormalParams> weights;                 // T x K per trial

  /// Embedding means ~ N(0, 0.1^2) with log-scale -1; geometry means from the
  /// given centers / log-widths with log-scale -1; weight means 0, log-scale 0.
  static VariationalState initialize(const StudyDataset& dataset,
                                     const model::GenerativeConfig& config,
                                     const Tensor& centers, const Tensor& log_widths, Rng& rng);

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::size_t parameter_count() const;
};

/// 2D(P + S) + 8PK + 2NTK for a dataset with a common trial length T.
std::size_t variational_parameter_count(std::size_t participants, std::size_t stimuli,
                                        std::size_t trials, std::size_t time_points,
                                        std::size_t factors, std::size_t embedding_dim);

}  // namespace ntfa::inference
