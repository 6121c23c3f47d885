#include "ntfa/baselines/pca.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ntfa/error.hpp"

namespace ntfa::baselines {

Tensor pca_embed_rows(const Tensor& rows, std::size_t components) {
  if (rows.rank() != 2) throw DimensionError("pca: expected an N x V matrix");
  const auto n = static_cast<Eigen::Index>(rows.rows());
  const auto v = static_cast<Eigen::Index>(rows.cols());
  if (n < 2) throw ContractError("pca: need at least two rows");
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMatrix x = Eigen::Map<const RowMatrix>(rows.data(), n, v);
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd gram = x * x.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("pca: eigendecomposition failed");
  // Eigenvalues come in ascending order.
  const double top = std::max(eig.eigenvalues()(n - 1), 0.0);
  Tensor out({rows.rows(), components}, 0.0);
  for (std::size_t c = 0; c < components && static_cast<Eigen::Index>(c) < n; ++c) {
    const Eigen::Index col = n - 1 - static_cast<Eigen::Index>(c);
    const double lambda = eig.eigenvalues()(col);
    if (!(lambda > 1e-12 * top) || top == 0.0) continue;
    // Projection of row i on the unit axis X^T u / sqrt(lambda) is sqrt(lambda) u_i.
    const double scale = std::sqrt(lambda);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.at(static_cast<std::size_t>(i), c) = scale * eig.eigenvectors()(i, col);
    }
  }
  return out;
}

Tensor pca_timeavg_embed(const StudyDataset& dataset) {
  const std::size_t n = dataset.trials.size();
  if (n < 2) throw ContractError("pca_timeavg_embed: need at least two trials");
  const std::size_t v = dataset.voxels();
  Tensor avg({n, v}, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& y = dataset.trials[i].data;
    if (y.cols() != v) throw DimensionError("pca_timeavg_embed: trial voxel count mismatch");
    for (std::size_t t = 0; t < y.rows(); ++t) {
      for (std::size_t j = 0; j < v; ++j) avg.at(i, j) += y.at(t, j);
    }
    for (std::size_t j = 0; j < v; ++j) avg.at(i, j) /= static_cast<double>(y.rows());
  }
  return pca_embed_rows(avg, 2);
}

}  // namespace ntfa::baselines
