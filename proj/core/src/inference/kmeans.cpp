#include "ntfa/inference/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ntfa/error.hpp"

namespace ntfa::inference {

namespace {

double sq_dist(const Tensor& pts, std::size_t i, const Tensor& centers, std::size_t k) {
  double d2 = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    const double d = pts.at(i, a) - centers.at(k, a);
    d2 += d * d;
  }
  return d2;
}

void set_center(Tensor& centers, std::size_t k, const Tensor& pts, std::size_t i) {
  for (std::size_t a = 0; a < 3; ++a) centers.at(k, a) = pts.at(i, a);
}

}  // namespace

KMeansResult weighted_kmeans(const Tensor& points, std::span<const double> weights,
                             std::size_t clusters, std::size_t max_iterations) {
  if (points.rank() != 2 || points.cols() != 3) {
    throw DimensionError("kmeans: points must be n x 3");
  }
  const std::size_t n = points.rows();
  if (weights.size() != n) throw DimensionError("kmeans: one weight per point required");
  if (clusters == 0 || clusters > n) {
    throw ContractError("kmeans: need 1 <= clusters <= number of points");
  }
  std::vector<double> w(weights.begin(), weights.end());
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ContractError("kmeans: weights must be >= 0");
    total += x;
  }
  if (total <= 0.0) std::fill(w.begin(), w.end(), 1.0);

  Tensor centers({clusters, 3}, 0.0);
  std::vector<std::size_t> chosen;
  const std::size_t first =
      static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
  set_center(centers, 0, points, first);
  chosen.push_back(first);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t k = 1; k < clusters; ++k) {
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(points, i, centers, k - 1));
      // Add a tiny unweighted term so zero-weight points can still be picked
      // once every weighted point coincides with a center.
      const double score = (w[i] + 1e-12) * nearest[i];
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    set_center(centers, k, points, best);
  }

  std::vector<std::size_t> assign(n, clusters);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < clusters; ++k) {
        const double d2 = sq_dist(points, i, centers, k);
        if (d2 < best) {
          best = d2;
          arg = k;
        }
      }
      if (assign[i] != arg) {
        assign[i] = arg;
        changed = true;
      }
    }
    std::vector<double> mass(clusters, 0.0);
    Tensor sums({clusters, 3}, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      mass[assign[i]] += w[i];
      for (std::size_t a = 0; a < 3; ++a) sums.at(assign[i], a) += w[i] * points.at(i, a);
    }
    for (std::size_t k = 0; k < clusters; ++k) {
      if (mass[k] > 0.0) {
        for (std::size_t a = 0; a < 3; ++a) centers.at(k, a) = sums.at(k, a) / mass[k];
        continue;
      }
      std::size_t far = 0;
      double far_score = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double score = w[i] * sq_dist(points, i, centers, assign[i]);
        if (score > far_score) {
          far_score = score;
          far = i;
        }
      }
      set_center(centers, k, points, far);
      assign[far] = k;
      changed = true;
    }
    if (!changed) break;
  }

  KMeansResult out{centers, Tensor({clusters}, 0.0), assign};
  std::vector<double> spread(clusters, 0.0), mass(clusters, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    spread[assign[i]] += w[i] * sq_dist(points, i, centers, assign[i]);
    mass[assign[i]] += w[i];
  }
  for (std::size_t k = 0; k < clusters; ++k) {
    const double d2 = mass[k] > 0.0 ? spread[k] / mass[k] : 1.0;
    out.log_widths[k] = std::log(std::max(d2, 1e-3));
  }
  return out;
}

KMeansResult init_kmeans(const StudyDataset& dataset, std::span<const std::size_t> trials,
                         std::size_t factors) {
  if (trials.empty()) throw ContractError("init_kmeans: no trials");
  const std::size_t v = dataset.voxels();
  std::vector<double> weight(v, 0.0);
  std::size_t rows = 0;
  for (std::size_t n : trials) {
    const Tensor& y = dataset.trials.at(n).data;
    for (std::size_t t = 0; t < y.rows(); ++t) {
      for (std::size_t j = 0; j < v; ++j) weight[j] += std::abs(y.at(t, j));
    }
    rows += y.rows();
  }
  for (double& x : weight) x /= static_cast<double>(std::max<std::size_t>(rows, 1));
  return weighted_kmeans(dataset.grid.coords, weight, factors);
}

}  // namespace ntfa::inference
