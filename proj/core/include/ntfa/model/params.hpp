#pragma once

#include <cstddef>
#include <vector>

#include "ntfa/diff/tensor.hpp"
#include "ntfa/rng.hpp"

namespace ntfa::model {

using diff::Tensor;

struct GenerativeConfig {
  std::size_t factors = 3;        // K
  std::size_t embedding_dim = 2;  // D

  void validate() const;
};

/// y = weight * x + bias, weight is out x in.
struct LinearLayer {
  Tensor weight;
  Tensor bias;

  std::size_t in() const { return weight.cols(); }
  std::size_t out() const { return weight.rows(); }
};

/// Fully connected network with a learnable PReLU slope after every layer but
/// the last.
struct Mlp {
  std::vector<LinearLayer> layers;
  std::vector<Tensor> slopes;

  /// Xavier-uniform weights, zero biases, slopes 0.25.
  static Mlp make(const std::vector<std::size_t>& widths, Rng& rng);

  std::size_t parameter_count() const;
  std::size_t input_dim() const { return layers.front().in(); }
  std::size_t output_dim() const { return layers.back().out(); }
};

/// Generative parameters: the factor network (D -> 2D -> 4D -> 8K), the weight
/// network (2D -> 4D -> 8D -> 2K) and the observation-noise log-scale.
struct GenerativeParams {
  GenerativeConfig config;
  Mlp factor_net;
  Mlp weight_net;
  Tensor log_sigma_y = Tensor::scalar(0.0);

  static GenerativeParams initialize(const GenerativeConfig& config, Rng& rng,
                                     double log_sigma_y = 0.0);

  /// Overwrites the factor network's output bias so that, for a zero hidden
  /// activation, it emits the given centers (K x 3) and log-widths (K).
  void seed_factor_bias(const Tensor& centers, const Tensor& log_widths,
                        double center_log_scale, double width_log_scale);

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::size_t parameter_count() const;
};

/// Closed-form size of GenerativeParams for (K, D): both networks with their
/// two PReLU slopes each, plus the noise scale.
std::size_t generative_parameter_count(std::size_t factors, std::size_t embedding_dim);

/// Index of the factor network output holding (k, slot, moment) of the
/// K x 4 x 2 view: slot 0..2 are center coordinates, slot 3 the log-width;
/// moment 0 is the mean, 1 the log-scale.
constexpr std::size_t factor_output_index(std::size_t k, std::size_t slot, std::size_t moment) {
  return k * 8 + slot * 2 + moment;
}

/// Index of the weight network output for (k, moment) of the K x 2 view.
constexpr std::size_t weight_output_index(std::size_t k, std::size_t moment) {
  return k * 2 + moment;
}

}  // namespace ntfa::model
