#include "ntfa/evaluation/evaluation.hpp"

#include <cmath>
#include <string>

#include "ntfa/diff/ops.hpp"
#include "ntfa/error.hpp"
#include "ntfa/model/ntfa.hpp"
#include "ntfa/rng.hpp"

namespace ntfa::evaluation {

SplitPlan heldout_split(const StudyDataset& dataset) {
  const std::size_t s_task = dataset.num_task_stimuli();
  if (dataset.num_participants < 2 || s_task < 2) {
    throw ContractError("heldout_split: need at least 2 participants and 2 task stimuli");
  }
  SplitPlan plan;
  for (std::size_t n = 0; n < dataset.trials.size(); ++n) {
    const Trial& t = dataset.trials[n];
    const bool held = t.block == BlockType::task && t.participant % s_task == t.stimulus;
    (held ? plan.test : plan.train).push_back(n);
  }
  const TrialCoverage cov = count_coverage(dataset, plan.train);
  for (std::size_t p = 0; p < dataset.num_participants; ++p) {
    if (cov.participant[p] == 0) {
      throw ContractError("heldout_split: participant " + std::to_string(p) +
                          " has no training trial");
    }
  }
  for (std::size_t s = 0; s < dataset.num_stimuli; ++s) {
    if (cov.stimulus[s] == 0) {
      throw ContractError("heldout_split: stimulus " + std::to_string(s) +
                          " has no training trial");
    }
  }
  return plan;
}

namespace {

Tensor draw(const Tensor& mean, const Tensor& log_scale, Rng& rng) {
  Tensor out(mean.shape());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    out[i] = mean[i] + std::exp(diff::clamp_log_scale(log_scale[i])) * rng.normal();
  }
  return out;
}

void check_embeddings(const inference::VariationalState& q, std::size_t p, std::size_t s) {
  if (p >= q.participant_embeddings.size() || q.participant_embeddings[p].mean.empty()) {
    throw ContractError("predictive: no embedding for participant " + std::to_string(p));
  }
  if (s >= q.stimulus_embeddings.size() || q.stimulus_embeddings[s].mean.empty()) {
    throw ContractError("predictive: no embedding for stimulus " + std::to_string(s));
  }
}

}  // namespace

PredictiveBound log_predictive_bound(const model::GenerativeParams& params,
                                     const inference::VariationalState& q,
                                     const StudyDataset& dataset,
                                     std::span<const std::size_t> test, std::size_t particles,
                                     std::uint64_t seed) {
  if (particles == 0) throw ContractError("log_predictive_bound: need at least one particle");
  const std::size_t k_count = params.config.factors;
  const double log_sigma_y = params.log_sigma_y.item();
  PredictiveBound out;
  for (std::size_t n : test) {
    if (n >= dataset.trials.size()) throw ContractError("log_predictive_bound: bad trial index");
    const Trial& trial = dataset.trials[n];
    check_embeddings(q, trial.participant, trial.stimulus);
    const auto& qp = q.participant_embeddings[trial.participant];
    const auto& qs = q.stimulus_embeddings[trial.stimulus];
    Rng rng = Rng::derive(seed, n);
    double acc = 0.0;
    for (std::size_t l = 0; l < particles; ++l) {
      const Tensor zp = draw(qp.mean, qp.log_scale, rng);
      const Tensor zs = draw(qs.mean, qs.log_scale, rng);
      const model::FactorPrior fp = model::eta_f_forward(params, zp);
      const Tensor centers = draw(fp.center_mean, fp.center_log_scale, rng);
      const Tensor widths = draw(fp.width_mean, fp.width_log_scale, rng);
      const model::WeightPrior wp = model::eta_w_forward(params, zp, zs);
      Tensor w({trial.time_points(), k_count}, 0.0);
      for (std::size_t t = 0; t < trial.time_points(); ++t) {
        for (std::size_t k = 0; k < k_count; ++k) {
          w.at(t, k) = wp.mean[k] + std::exp(diff::clamp_log_scale(wp.log_scale[k])) * rng.normal();
        }
      }
      const Tensor f = model::rbf_factor_matrix(centers, widths, dataset.grid);
      acc += model::log_likelihood(trial.data, w, f, log_sigma_y);
    }
    const double value = acc / static_cast<double>(particles);
    out.per_trial.push_back(value);
    out.total += value;
  }
  return out;
}

Tensor posterior_predictive_mean(const model::GenerativeParams& params,
                                 const inference::VariationalState& q, const VoxelGrid& grid,
                                 std::size_t participant, std::size_t stimulus) {
  check_embeddings(q, participant, stimulus);
  const Tensor& zp = q.participant_embeddings[participant].mean;
  const Tensor& zs = q.stimulus_embeddings[stimulus].mean;
  const model::FactorPrior fp = model::eta_f_forward(params, zp);
  const model::WeightPrior wp = model::eta_w_forward(params, zp, zs);
  const Tensor f = model::rbf_factor_matrix(fp.center_mean, fp.width_mean, grid);
  const std::size_t k_count = params.config.factors;
  const std::size_t v_count = grid.size();
  Tensor out({v_count}, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t v = 0; v < v_count; ++v) out[v] += wp.mean[k] * f.at(k, v);
  }
  return out;
}

const char* to_string(ModelKind kind) { return kind == ModelKind::ntfa ? "ntfa" : "htfa"; }

std::size_t parameter_count(ModelKind kind, const CountConfig& c) {
  for (std::size_t x : {c.participants, c.stimuli, c.trials, c.time_points, c.factors,
                        c.embedding_dim}) {
    if (x == 0) throw ContractError("parameter_count: every size must be >= 1");
  }
  if (kind == ModelKind::ntfa) {
    return model::generative_parameter_count(c.factors, c.embedding_dim) +
           inference::variational_parameter_count(c.participants, c.stimuli, c.trials,
                                                  c.time_points, c.factors, c.embedding_dim);
  }
  const std::size_t geometry = 2 * (3 * c.factors + c.factors);
  return geometry + c.trials * geometry + 2 * c.trials * c.time_points * c.factors;
}

}  // namespace ntfa::evaluation
