#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ntfa/data.hpp"
#include "ntfa/inference/variational.hpp"
#include "ntfa/model/params.hpp"

namespace ntfa::testing {

/// One participant, one stimulus, one factor, one voxel and one time point
/// with one-dimensional embeddings.  The network slopes are set to 1 so the
/// integrands are smooth for Gauss-Hermite quadrature.
struct ToyModel {
  model::GenerativeParams params;
  StudyDataset dataset;
  inference::VariationalState q;
};

ToyModel make_toy(std::uint64_t seed, double observation);

/// Nodes and weights of the n-point Gauss-Hermite rule for a standard normal
/// (weights sum to 1), by the Golub-Welsch eigenvalue method.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermite gauss_hermite(std::size_t n);

/// log p(Y) with the weight integrated analytically and the embeddings,
/// center and log-width integrated by quadrature under the prior.
double quadrature_log_marginal(const ToyModel& toy, std::size_t nodes);

/// log of the predictive density of the toy's observation when the
/// embeddings follow q and every other latent follows the prior given them.
double quadrature_log_predictive(const ToyModel& toy, std::size_t nodes);

}  // namespace ntfa::testing
