#include "ntfa/model/ntfa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "ntfa/error.hpp"

namespace ntfa::model {

using diff::Graph;
using diff::Shape;

Var mlp_forward(Binding& bind, const Mlp& net, Var input) {
  if (input.size() != net.input_dim()) {
    throw DimensionError("mlp: expected input of size " + std::to_string(net.input_dim()) +
                         ", got " + std::to_string(input.size()));
  }
  Var h = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LinearLayer& layer = net.layers[i];
    h = diff::reshape(h, Shape{layer.in(), 1});
    h = diff::matmul(bind(layer.weight), h);
    h = diff::reshape(h, Shape{layer.out()});
    h = diff::add(h, bind(layer.bias));
    if (i < net.slopes.size()) h = diff::prelu(h, bind(net.slopes[i]));
  }
  return h;
}

FactorPriorVars eta_f_forward(Binding& bind, const GenerativeParams& params, Var z_p) {
  const std::size_t k_count = params.config.factors;
  Var out = mlp_forward(bind, params.factor_net, z_p);
  std::vector<std::size_t> cm, cs, wm, ws;
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t d = 0; d < 3; ++d) {
      cm.push_back(factor_output_index(k, d, 0));
      cs.push_back(factor_output_index(k, d, 1));
    }
    wm.push_back(factor_output_index(k, 3, 0));
    ws.push_back(factor_output_index(k, 3, 1));
  }
  return FactorPriorVars{diff::gather(out, std::move(cm), Shape{k_count, 3}),
                         diff::gather(out, std::move(cs), Shape{k_count, 3}),
                         diff::gather(out, std::move(wm), Shape{k_count}),
                         diff::gather(out, std::move(ws), Shape{k_count})};
}

WeightPriorVars eta_w_forward(Binding& bind, const GenerativeParams& params, Var z_p, Var z_s) {
  const std::size_t d = params.config.embedding_dim;
  if (z_p.size() != d || z_s.size() != d) {
    throw DimensionError("eta_w: embeddings must have dimension " + std::to_string(d));
  }
  const std::size_t k_count = params.config.factors;
  const Var parts[] = {z_p, z_s};
  Var out = mlp_forward(bind, params.weight_net, diff::concat(parts));
  std::vector<std::size_t> m, s;
  for (std::size_t k = 0; k < k_count; ++k) {
    m.push_back(weight_output_index(k, 0));
    s.push_back(weight_output_index(k, 1));
  }
  return WeightPriorVars{diff::gather(out, std::move(m), Shape{k_count}),
                         diff::gather(out, std::move(s), Shape{k_count})};
}

FactorPrior eta_f_forward(const GenerativeParams& params, const Tensor& z_p) {
  Graph g;
  Binding bind(g, false);
  const FactorPriorVars v = eta_f_forward(bind, params, g.constant_ref(z_p));
  return FactorPrior{v.center_mean.value(), v.center_log_scale.value(), v.width_mean.value(),
                     v.width_log_scale.value()};
}

WeightPrior eta_w_forward(const GenerativeParams& params, const Tensor& z_p, const Tensor& z_s) {
  Graph g;
  Binding bind(g, false);
  const WeightPriorVars v = eta_w_forward(bind, params, g.constant_ref(z_p), g.constant_ref(z_s));
  return WeightPrior{v.mean.value(), v.log_scale.value()};
}

Var rbf_factor_matrix(Var centers, Var log_widths, const VoxelGrid& grid) {
  return diff::rbf_factors(centers, log_widths, grid.coords);
}

Tensor rbf_factor_matrix(const Tensor& centers, const Tensor& log_widths, const VoxelGrid& grid) {
  Graph g;
  return rbf_factor_matrix(g.constant_ref(centers), g.constant_ref(log_widths), grid).value();
}

Var log_likelihood(const Tensor& y, Var weights, Var factors, Var log_sigma_y) {
  return diff::gaussian_linear_loglik(y, weights, factors, log_sigma_y);
}

double log_likelihood(const Tensor& y, const Tensor& weights, const Tensor& factors,
                      double log_sigma_y) {
  Graph g;
  return log_likelihood(y, g.constant_ref(weights), g.constant_ref(factors),
                        g.constant(Tensor::scalar(log_sigma_y)))
      .item();
}

namespace {

Var require(const std::vector<std::optional<Var>>& vars, std::size_t i, const char* what) {
  if (i >= vars.size() || !vars[i]) {
    throw ContractError(std::string("log_joint: missing ") + what + " " + std::to_string(i));
  }
  return *vars[i];
}

double term_weight(const std::vector<double>* w, std::size_t i) {
  if (w == nullptr || w->empty()) return 1.0;
  return w->at(i);
}

}  // namespace

Var log_joint(Binding& bind, const GenerativeParams& params, const StudyDataset& dataset,
              std::span<const std::size_t> trials, const LatentVars& latents,
              const JointOptions& options) {
  Graph& g = bind.graph();
  const Var zero = g.constant(Tensor::scalar(0.0));
  std::set<std::size_t> participants;
  std::set<std::size_t> stimuli;
  for (std::size_t n : trials) {
    participants.insert(dataset.trials.at(n).participant);
    stimuli.insert(dataset.trials.at(n).stimulus);
  }
  const std::vector<double>* pw = options.weights ? &options.weights->participant : nullptr;
  const std::vector<double>* sw = options.weights ? &options.weights->stimulus : nullptr;

  std::vector<Var> terms;
  auto push = [&](Var term, double weight) {
    terms.push_back(weight == 1.0 ? term : diff::scale(term, weight));
  };

  std::map<std::size_t, Var> factors;
  for (std::size_t p : participants) {
    const double w = term_weight(pw, p);
    const Var z = require(latents.participant_embeddings, p, "participant embedding");
    const Var c = require(latents.centers, p, "factor centers for participant");
    const Var r = require(latents.log_widths, p, "factor log-widths for participant");
    push(diff::gaussian_logpdf(z, zero, zero), w);
    const FactorPriorVars prior = eta_f_forward(bind, params, z);
    push(diff::gaussian_logpdf(c, prior.center_mean, prior.center_log_scale), w);
    push(diff::gaussian_logpdf(r, prior.width_mean, prior.width_log_scale), w);
    if (options.include_likelihood) factors.emplace(p, rbf_factor_matrix(c, r, dataset.grid));
  }
  for (std::size_t s : stimuli) {
    const Var z = require(latents.stimulus_embeddings, s, "stimulus embedding");
    push(diff::gaussian_logpdf(z, zero, zero), term_weight(sw, s));
  }

  std::map<std::pair<std::size_t, std::size_t>, WeightPriorVars> weight_priors;
  const Var log_sigma_y = bind(params.log_sigma_y);
  for (std::size_t n : trials) {
    const Trial& trial = dataset.trials[n];
    const Var w = require(latents.weights, n, "weights for trial");
    const std::size_t t_count = trial.time_points();
    if (w.value().rank() != 2 || w.value().rows() != t_count ||
        w.value().cols() != params.config.factors) {
      throw DimensionError("log_joint: weights for trial " + std::to_string(n) +
                           " must be T x K");
    }
    const auto key = std::make_pair(trial.participant, trial.stimulus);
    auto it = weight_priors.find(key);
    if (it == weight_priors.end()) {
      const Var zp = require(latents.participant_embeddings, trial.participant,
                             "participant embedding");
      const Var zs = require(latents.stimulus_embeddings, trial.stimulus, "stimulus embedding");
      it = weight_priors.emplace(key, eta_w_forward(bind, params, zp, zs)).first;
    }
    push(diff::gaussian_logpdf(w, diff::tile_rows(it->second.mean, t_count),
                               diff::tile_rows(it->second.log_scale, t_count)),
         1.0);
    if (options.include_likelihood) {
      push(log_likelihood(trial.data, w, factors.at(trial.participant), log_sigma_y), 1.0);
    }
  }
  if (terms.empty()) return zero;
  return diff::sum(diff::stack(terms));
}

double log_joint(const StudyDataset& dataset, std::span<const std::size_t> trials,
                 const StudyLatents& latents, const GenerativeParams& params) {
  Graph g;
  Binding bind(g, false);
  auto wrap = [&](const std::vector<Tensor>& values) {
    std::vector<std::optional<Var>> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!values[i].empty()) out[i] = g.constant_ref(values[i]);
    }
    return out;
  };
  LatentVars vars{wrap(latents.participant_embeddings), wrap(latents.stimulus_embeddings),
                  wrap(latents.centers), wrap(latents.log_widths), wrap(latents.weights)};
  return log_joint(bind, params, dataset, trials, vars).item();
}

namespace {

Tensor draw(const Tensor& mean, const Tensor& log_scale, Rng& rng) {
  Tensor out(mean.shape());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    out[i] = mean[i] + std::exp(diff::clamp_log_scale(log_scale[i])) * rng.normal();
  }
  return out;
}

}  // namespace

GeneratedStudy sample_generative(const GenerativeParams& params, const VoxelGrid& grid,
                                 std::span<const PlannedTrial> plan, std::uint64_t seed) {
  if (plan.empty()) throw ContractError("sample_generative: empty trial plan");
  const std::size_t d = params.config.embedding_dim;
  const std::size_t k_count = params.config.factors;
  const std::size_t v_count = grid.size();
  std::size_t p_count = 0;
  std::size_t s_count = 0;
  for (const PlannedTrial& t : plan) {
    if (t.time_points == 0) throw ContractError("sample_generative: trial with no time points");
    p_count = std::max(p_count, t.participant + 1);
    s_count = std::max(s_count, t.stimulus + 1);
  }

  Rng rng(seed);
  GeneratedStudy out;
  StudyLatents& lat = out.latents;
  const Tensor zero_d(Shape{d}, 0.0);
  for (std::size_t p = 0; p < p_count; ++p) lat.participant_embeddings.push_back(draw(zero_d, zero_d, rng));
  for (std::size_t s = 0; s < s_count; ++s) lat.stimulus_embeddings.push_back(draw(zero_d, zero_d, rng));
  lat.centers.assign(p_count, Tensor());
  lat.log_widths.assign(p_count, Tensor());
  std::vector<Tensor> factor_mats(p_count);

  StudyDataset& ds = out.dataset;
  ds.num_participants = p_count;
  ds.num_stimuli = s_count;
  ds.grid = grid;
  const double sigma_y = std::exp(diff::clamp_log_scale(params.log_sigma_y.item()));
  for (const PlannedTrial& plan_trial : plan) {
    const std::size_t p = plan_trial.participant;
    if (lat.centers[p].empty()) {
      const FactorPrior fp = eta_f_forward(params, lat.participant_embeddings[p]);
      lat.centers[p] = draw(fp.center_mean, fp.center_log_scale, rng);
      lat.log_widths[p] = draw(fp.width_mean, fp.width_log_scale, rng);
      factor_mats[p] = rbf_factor_matrix(lat.centers[p], lat.log_widths[p], grid);
    }
    const WeightPrior wp =
        eta_w_forward(params, lat.participant_embeddings[p], lat.stimulus_embeddings[plan_trial.stimulus]);
    const std::size_t t_count = plan_trial.time_points;
    Tensor weights(Shape{t_count, k_count});
    Tensor y(Shape{t_count, v_count});
    const Tensor& f = factor_mats[p];
    for (std::size_t t = 0; t < t_count; ++t) {
      for (std::size_t k = 0; k < k_count; ++k) {
        weights.at(t, k) =
            wp.mean[k] + std::exp(diff::clamp_log_scale(wp.log_scale[k])) * rng.normal();
      }
      for (std::size_t v = 0; v < v_count; ++v) {
        double mu = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) mu += weights.at(t, k) * f.at(k, v);
        y.at(t, v) = mu + sigma_y * rng.normal();
      }
    }
    lat.weights.push_back(std::move(weights));
    ds.trials.push_back(Trial{p, plan_trial.stimulus, p, BlockType::task, std::move(y)});
  }
  return out;
}

}  // namespace ntfa::model
