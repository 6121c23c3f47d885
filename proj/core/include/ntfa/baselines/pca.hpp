#pragma once

#include "ntfa/data.hpp"

namespace ntfa::baselines {

/// Time-averages every trial to a V-vector, centers across trials and
/// projects onto the top two principal axes, obtained from the N x N Gram
/// matrix.  Returns N x 2 coordinates.  Axes whose eigenvalue is below 1e-12
/// of the largest yield zero coordinates.  Throws ContractError when N < 2.
Tensor pca_timeavg_embed(const StudyDataset& dataset);

/// Same projection for rows of an N x V matrix.
Tensor pca_embed_rows(const Tensor& rows, std::size_t components = 2);

}  // namespace ntfa::baselines
