#include "ntfa/baselines/htfa.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ntfa/diff/ops.hpp"
#include "ntfa/error.hpp"
#include "ntfa/inference/kmeans.hpp"
#include "ntfa/inference/optimize.hpp"
#include "ntfa/model/ntfa.hpp"

namespace ntfa::baselines {

using diff::Var;

std::vector<Tensor*> HtfaState::variational_tensors() {
  std::vector<Tensor*> out{&template_centers.mean, &template_centers.log_scale,
                           &template_log_widths.mean, &template_log_widths.log_scale};
  for (auto* group : {&centers, &log_widths, &weights}) {
    for (NormalParams& p : *group) {
      out.push_back(&p.mean);
      out.push_back(&p.log_scale);
    }
  }
  return out;
}

std::vector<const Tensor*> HtfaState::variational_tensors() const {
  std::vector<const Tensor*> out;
  for (Tensor* t : const_cast<HtfaState*>(this)->variational_tensors()) out.push_back(t);
  return out;
}

std::size_t HtfaState::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : variational_tensors()) n += t->size();
  return n;
}

namespace {

Tensor standard_noise(const diff::Shape& shape, Rng& rng) {
  Tensor out(shape);
  for (double& x : out.values()) x = rng.normal();
  return out;
}

}  // namespace

Var htfa_bound(diff::Binding& bind, const HtfaState& state, const StudyDataset& dataset,
               std::span<const std::size_t> batch, std::size_t train_size, std::size_t particles,
               Rng& rng) {
  if (batch.empty()) throw ContractError("htfa_bound: empty batch");
  if (particles == 0) throw ContractError("htfa_bound: need at least one particle");
  if (train_size < batch.size()) throw ContractError("htfa_bound: batch larger than training set");
  if (state.weights.size() != dataset.trials.size()) {
    throw DimensionError("htfa_bound: state does not match the dataset");
  }
  diff::Graph& g = bind.graph();
  const double fraction = static_cast<double>(batch.size()) / static_cast<double>(train_size);
  const HtfaHyper& h = state.hyper;
  auto constant = [&](double x) { return g.constant(Tensor::scalar(x)); };
  const Var log_sigma_y = bind(state.log_sigma_y);

  std::vector<Var> log_weights;
  for (std::size_t l = 0; l < particles; ++l) {
    std::vector<Var> terms;
    auto add = [&](Var term, double weight) {
      terms.push_back(weight == 1.0 ? term : diff::scale(term, weight));
    };
    // Draws from q and adds -log q, scaled like the matching prior term.
    auto sample = [&](const NormalParams& np, double weight) {
      const Var mean = bind(np.mean);
      const Var log_scale = bind(np.log_scale);
      const Var z = diff::reparam_sample(mean, log_scale, standard_noise(np.mean.shape(), rng));
      add(diff::gaussian_logpdf(z, mean, log_scale), -weight);
      return z;
    };
    const Var c_bar = sample(state.template_centers, fraction);
    const Var r_bar = sample(state.template_log_widths, fraction);
    add(diff::gaussian_logpdf(c_bar, bind(state.prior_centers),
                              constant(h.template_center_log_scale)),
        fraction);
    add(diff::gaussian_logpdf(r_bar, bind(state.prior_log_widths),
                              constant(h.template_width_log_scale)),
        fraction);
    for (std::size_t n : batch) {
      const Trial& trial = dataset.trials.at(n);
      const Var c = sample(state.centers.at(n), 1.0);
      const Var r = sample(state.log_widths.at(n), 1.0);
      const Var w = sample(state.weights.at(n), 1.0);
      add(diff::gaussian_logpdf(c, c_bar, constant(h.trial_center_log_scale)), 1.0);
      add(diff::gaussian_logpdf(r, r_bar, constant(h.trial_width_log_scale)), 1.0);
      add(diff::gaussian_logpdf(w, constant(0.0), constant(h.weight_log_scale)), 1.0);
      const Var f = model::rbf_factor_matrix(c, r, dataset.grid);
      add(model::log_likelihood(trial.data, w, f, log_sigma_y), 1.0);
    }
    log_weights.push_back(diff::sum(diff::stack(terms)));
  }
  if (log_weights.size() == 1) return log_weights.front();
  return diff::add_constant(diff::logsumexp(diff::stack(log_weights)),
                            -std::log(static_cast<double>(particles)));
}

namespace {

HtfaState initialize_state(const StudyDataset& dataset, std::span<const std::size_t> train,
                           std::size_t factors, const HtfaHyper& hyper) {
  const inference::KMeansResult km = inference::init_kmeans(dataset, train, factors);
  HtfaState s;
  s.factors = factors;
  s.hyper = hyper;
  s.prior_centers = km.centers;
  s.prior_log_widths = km.log_widths;
  s.template_centers = NormalParams{km.centers, Tensor({factors, 3}, -1.0)};
  s.template_log_widths = NormalParams{km.log_widths, Tensor({factors}, -1.0)};
  for (const Trial& t : dataset.trials) {
    s.centers.push_back(NormalParams{km.centers, Tensor({factors, 3}, -1.0)});
    s.log_widths.push_back(NormalParams{km.log_widths, Tensor({factors}, -1.0)});
    s.weights.push_back(NormalParams::filled({t.time_points(), factors}, 0.0, 0.0));
  }
  double sum = 0.0, sum_sq = 0.0, count = 0.0;
  for (std::size_t n : train) {
    for (double y : dataset.trials[n].data.values()) {
      sum += y;
      sum_sq += y * y;
      count += 1.0;
    }
  }
  const double mean = sum / count;
  s.log_sigma_y = Tensor::scalar(0.5 * std::log(std::max(sum_sq / count - mean * mean, 1e-12)));
  return s;
}

}  // namespace

HtfaFit htfa_fit(const StudyDataset& dataset, std::span<const std::size_t> train,
                 std::size_t factors, const inference::TrainConfig& config,
                 const HtfaHyper& hyper, const inference::EpochCallback& on_epoch) {
  config.validate();
  dataset.validate();
  if (train.empty()) throw ContractError("htfa_fit: empty training set");
  for (std::size_t n : train) {
    if (n >= dataset.trials.size()) throw ContractError("htfa_fit: training index out of range");
  }
  if (factors == 0 || factors > dataset.voxels()) {
    throw ContractError("htfa_fit: need 1 <= K <= V");
  }
  HtfaFit out{initialize_state(dataset, train, factors, hyper), {}};
  if (config.epochs == 0) return out;
  Rng rng(config.seed);
  const inference::BatchObjective objective =
      [&](diff::Binding& bind, std::span<const std::size_t> batch, Rng& r) {
        return htfa_bound(bind, out.state, dataset, batch, train.size(), config.particles, r);
      };
  out.loss_trace = inference::optimize_bound(
      train, config,
      inference::OptimizeTargets{{&out.state.log_sigma_y}, out.state.variational_tensors()},
      objective, rng, [](std::size_t n) { return "trial " + std::to_string(n); }, on_epoch);
  return out;
}

double htfa_log_predictive(const HtfaState& state, const StudyDataset& dataset,
                           std::span<const std::size_t> test, std::size_t particles,
                           std::uint64_t seed, std::vector<double>* per_trial) {
  if (particles == 0) throw ContractError("htfa_log_predictive: need at least one particle");
  const std::size_t k_count = state.factors;
  const double center_sd = std::exp(diff::clamp_log_scale(state.hyper.trial_center_log_scale));
  const double width_sd = std::exp(diff::clamp_log_scale(state.hyper.trial_width_log_scale));
  const double weight_sd = std::exp(diff::clamp_log_scale(state.hyper.weight_log_scale));
  if (per_trial) per_trial->clear();
  double total = 0.0;
  for (std::size_t n : test) {
    if (n >= dataset.trials.size()) throw ContractError("htfa_log_predictive: bad trial index");
    const Trial& trial = dataset.trials[n];
    Rng rng = Rng::derive(seed, 0);
    double acc = 0.0;
    for (std::size_t l = 0; l < particles; ++l) {
      Tensor c({k_count, 3}, 0.0);
      Tensor r({k_count}, 0.0);
      for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = state.template_centers.mean[i] + center_sd * rng.normal();
      }
      for (std::size_t k = 0; k < k_count; ++k) {
        r[k] = state.template_log_widths.mean[k] + width_sd * rng.normal();
      }
      Tensor w({trial.time_points(), k_count}, 0.0);
      for (double& x : w.values()) x = weight_sd * rng.normal();
      const Tensor f = model::rbf_factor_matrix(c, r, dataset.grid);
      acc += model::log_likelihood(trial.data, w, f, state.log_sigma_y.item());
    }
    const double value = acc / static_cast<double>(particles);
    if (per_trial) per_trial->push_back(value);
    total += value;
  }
  return total;
}

}  // namespace ntfa::baselines
