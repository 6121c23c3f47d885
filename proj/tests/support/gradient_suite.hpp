#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ntfa/data.hpp"
#include "ntfa/inference/variational.hpp"
#include "ntfa/model/params.hpp"
#include "ntfa/rng.hpp"

namespace ntfa::testing {

struct NamedError {
  std::string name;
  double error = 0.0;
};

/// One random finite-difference check of every differentiable primitive.
std::vector<NamedError> primitive_gradient_errors(Rng& rng);

/// Two participants, two stimuli, three trials and two factors with
/// randomized network biases and variational parameters.
struct SmallStudy {
  model::GenerativeParams params;
  StudyDataset dataset;
  inference::VariationalState q;
};

SmallStudy small_study(std::uint64_t seed);

/// Relative errors of `draws` randomly chosen scalar parameters of the full
/// two-particle bound of `small_study(100 + instance)` against central
/// differences.
std::vector<double> elbo_gradient_errors(std::uint64_t instance, Rng& pick, std::size_t draws = 20);

}  // namespace ntfa::testing
