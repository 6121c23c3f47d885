#include "ntfa/model/params.hpp"

#include <cmath>

#include "ntfa/error.hpp"

namespace ntfa::model {

void GenerativeConfig::validate() const {
  if (factors < 1) throw ContractError("config: need at least one factor");
  if (embedding_dim < 1) throw ContractError("config: embedding dimension must be >= 1");
}

Mlp Mlp::make(const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw ContractError("mlp: need input and output widths");
  Mlp net;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i];
    const std::size_t out = widths[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    LinearLayer layer{Tensor(diff::Shape{out, in}), Tensor(diff::Shape{out}, 0.0)};
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
    net.layers.push_back(std::move(layer));
    if (i + 2 < widths.size()) net.slopes.push_back(Tensor::scalar(0.25));
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = slopes.size();
  for (const LinearLayer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

GenerativeParams GenerativeParams::initialize(const GenerativeConfig& config, Rng& rng,
                                              double log_sigma_y) {
  config.validate();
  const std::size_t d = config.embedding_dim;
  const std::size_t k = config.factors;
  GenerativeParams p;
  p.config = config;
  p.factor_net = Mlp::make({d, 2 * d, 4 * d, 8 * k}, rng);
  p.weight_net = Mlp::make({2 * d, 4 * d, 8 * d, 2 * k}, rng);
  p.log_sigma_y = Tensor::scalar(log_sigma_y);
  return p;
}

void GenerativeParams::seed_factor_bias(const Tensor& centers, const Tensor& log_widths,
                                        double center_log_scale, double width_log_scale) {
  const std::size_t k_count = config.factors;
  if (centers.size() != 3 * k_count || log_widths.size() != k_count) {
    throw DimensionError("seed_factor_bias: expected K x 3 centers and K log-widths");
  }
  Tensor& bias = factor_net.layers.back().bias;
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t d = 0; d < 3; ++d) {
      bias[factor_output_index(k, d, 0)] = centers[3 * k + d];
      bias[factor_output_index(k, d, 1)] = center_log_scale;
    }
    bias[factor_output_index(k, 3, 0)] = log_widths[k];
    bias[factor_output_index(k, 3, 1)] = width_log_scale;
  }
}

namespace {
template <typename Net, typename Out>
void collect(Net& net, Out& out) {
  for (auto& l : net.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  for (auto& s : net.slopes) out.push_back(&s);
}
}  // namespace

std::vector<Tensor*> GenerativeParams::tensors() {
  std::vector<Tensor*> out;
  collect(factor_net, out);
  collect(weight_net, out);
  out.push_back(&log_sigma_y);
  return out;
}

std::vector<const Tensor*> GenerativeParams::tensors() const {
  std::vector<const Tensor*> out;
  collect(factor_net, out);
  collect(weight_net, out);
  out.push_back(&log_sigma_y);
  return out;
}

std::size_t GenerativeParams::parameter_count() const {
  return factor_net.parameter_count() + weight_net.parameter_count() + 1;
}

std::size_t generative_parameter_count(std::size_t k, std::size_t d) {
  const std::size_t factor_net = 2 * d * (d + 1) + 4 * d * (2 * d + 1) + 8 * k * (4 * d + 1) + 2;
  const std::size_t weight_net =
      4 * d * (2 * d + 1) + 8 * d * (4 * d + 1) + 2 * k * (8 * d + 1) + 2;
  return factor_net + weight_net + 1;
}

}  // namespace ntfa::model
