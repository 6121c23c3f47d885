#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "ntfa/data.hpp"
#include "ntfa/diff/binding.hpp"
#include "ntfa/inference/variational.hpp"
#include "ntfa/model/params.hpp"
#include "ntfa/rng.hpp"

namespace ntfa::inference {

using diff::Binding;
using diff::Var;

struct BoundOptions {
  std::size_t particles = 1;      // L
  bool include_likelihood = true;
};

/// Importance-weighted lower bound on log p(Y_batch) estimated with L
/// reparameterized particles from q:
///   log (1/L) sum_l exp(log p(Y, Z_l) - log q(Z_l)).
/// Participant- and stimulus-level terms of both p and q are scaled by the
/// fraction of `coverage` trials of that participant/stimulus present in the
/// batch, which makes the sum of batch bounds over a partition of the
/// training trials an estimate of the full-data bound.  Noise is drawn per
/// particle in the order: batch participants ascending (embedding, centers,
/// log-widths), batch stimuli ascending, then batch trials in order.
Var elbo_iwae(Binding& bind, const model::GenerativeParams& params, const VariationalState& q,
              const StudyDataset& dataset, std::span<const std::size_t> batch,
              const TrialCoverage& coverage, const BoundOptions& options, Rng& rng);

/// Value-only evaluation with the batch itself as the coverage.
double elbo_iwae(const model::GenerativeParams& params, const VariationalState& q,
                 const StudyDataset& dataset, std::span<const std::size_t> batch,
                 const BoundOptions& options, Rng& rng);

}  // namespace ntfa::inference
