#include "toy_model.hpp"

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "ntfa/diff/ops.hpp"
#include "ntfa/model/ntfa.hpp"
#include "ntfa/rng.hpp"

namespace ntfa::testing {

using diff::Tensor;

ToyModel make_toy(std::uint64_t seed, double observation) {
  Rng rng(seed);
  ToyModel toy;
  model::GenerativeConfig config;
  config.factors = 1;
  config.embedding_dim = 1;
  toy.params = model::GenerativeParams::initialize(config, rng, std::log(0.5));
  for (model::Mlp* net : {&toy.params.factor_net, &toy.params.weight_net}) {
    for (Tensor& slope : net->slopes) slope.fill(1.0);
    for (auto& layer : net->layers) {
      for (double& w : layer.weight.values()) w *= 0.5;
    }
  }
  Tensor& bias = toy.params.factor_net.layers.back().bias;
  for (std::size_t slot = 0; slot < 3; ++slot) {
    bias[model::factor_output_index(0, slot, 0)] = rng.normal(0.0, 0.3);
    bias[model::factor_output_index(0, slot, 1)] = rng.uniform(-1.0, -0.3);
  }
  bias[model::factor_output_index(0, 3, 0)] = rng.uniform(0.0, 1.0);
  bias[model::factor_output_index(0, 3, 1)] = rng.uniform(-1.5, -0.5);
  Tensor& wbias = toy.params.weight_net.layers.back().bias;
  wbias[model::weight_output_index(0, 0)] = rng.normal(0.0, 0.5);
  wbias[model::weight_output_index(0, 1)] = rng.uniform(-1.0, 0.0);

  toy.dataset.num_participants = 1;
  toy.dataset.num_stimuli = 1;
  toy.dataset.grid.coords = Tensor({1, 3}, 0.0);
  Trial trial;
  trial.data = Tensor::matrix(1, 1, {observation});
  toy.dataset.trials.push_back(trial);

  using inference::NormalParams;
  auto normal = [&](diff::Shape shape, double mean_sd, double lo, double hi) {
    NormalParams p = NormalParams::filled(shape, 0.0, 0.0);
    for (double& v : p.mean.values()) v = rng.normal(0.0, mean_sd);
    for (double& v : p.log_scale.values()) v = rng.uniform(lo, hi);
    return p;
  };
  toy.q.participant_embeddings.push_back(normal({1}, 0.5, -1.0, 0.0));
  toy.q.stimulus_embeddings.push_back(normal({1}, 0.5, -1.0, 0.0));
  toy.q.centers.push_back(normal({1, 3}, 0.3, -1.0, -0.3));
  toy.q.log_widths.push_back(normal({1}, 0.5, -1.5, -0.5));
  toy.q.weights.push_back(normal({1, 1}, 0.5, -1.0, 0.0));
  return toy;
}

GaussHermite gauss_hermite(std::size_t n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 1; i < n; ++i) {
    jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermite rule;
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes.push_back(solver.eigenvalues()(i));
    const double v = solver.eigenvectors()(0, i);
    rule.weights.push_back(v * v);
  }
  return rule;
}

namespace {

double sd_of(double log_scale) { return std::exp(diff::clamp_log_scale(log_scale)); }

double normal_density(double x, double mean, double sd) {
  const double u = (x - mean) / sd;
  return std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * M_PI));
}

/// p(Y | z_p, z_s) with the center and log-width integrated by quadrature and
/// the weight analytically.
double conditional_density(const ToyModel& toy, double zp, double zs, const GaussHermite& rule) {
  const Tensor zp_t = Tensor::vector({zp});
  const Tensor zs_t = Tensor::vector({zs});
  const model::FactorPrior fp = model::eta_f_forward(toy.params, zp_t);
  const model::WeightPrior wp = model::eta_w_forward(toy.params, zp_t, zs_t);
  const double y = toy.dataset.trials[0].data[0];
  const double sigma_y = sd_of(toy.params.log_sigma_y.item());
  const double mu_w = wp.mean[0];
  const double sd_w = sd_of(wp.log_scale[0]);
  const std::size_t n = rule.nodes.size();

  std::vector<double> sq[3];
  for (std::size_t d = 0; d < 3; ++d) {
    const double m = fp.center_mean[d];
    const double s = sd_of(fp.center_log_scale[d]);
    const double g = toy.dataset.grid.coords[d];
    for (std::size_t i = 0; i < n; ++i) {
      const double x = m + s * rule.nodes[i];
      sq[d].push_back((g - x) * (g - x));
    }
  }
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double rho = fp.width_mean[0] + sd_of(fp.width_log_scale[0]) * rule.nodes[r];
    const double inv_width = std::exp(-rho);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < n; ++c) {
          const double f = std::exp(-(sq[0][a] + sq[1][b] + sq[2][c]) * inv_width);
          const double sd = std::sqrt(sd_w * sd_w * f * f + sigma_y * sigma_y);
          total += rule.weights[r] * rule.weights[a] * rule.weights[b] * rule.weights[c] *
                   normal_density(y, mu_w * f, sd);
        }
      }
    }
  }
  return total;
}

double embedding_integral(const ToyModel& toy, std::size_t nodes, double zp_mean, double zp_sd,
                          double zs_mean, double zs_sd) {
  const GaussHermite rule = gauss_hermite(nodes);
  double total = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = 0; j < nodes; ++j) {
      const double zp = zp_mean + zp_sd * rule.nodes[i];
      const double zs = zs_mean + zs_sd * rule.nodes[j];
      total += rule.weights[i] * rule.weights[j] * conditional_density(toy, zp, zs, rule);
    }
  }
  return std::log(total);
}

}  // namespace

double quadrature_log_marginal(const ToyModel& toy, std::size_t nodes) {
  return embedding_integral(toy, nodes, 0.0, 1.0, 0.0, 1.0);
}

double quadrature_log_predictive(const ToyModel& toy, std::size_t nodes) {
  const auto& zp = toy.q.participant_embeddings[0];
  const auto& zs = toy.q.stimulus_embeddings[0];
  return embedding_integral(toy, nodes, zp.mean[0], sd_of(zp.log_scale[0]), zs.mean[0],
                            sd_of(zs.log_scale[0]));
}

}  // namespace ntfa::testing
