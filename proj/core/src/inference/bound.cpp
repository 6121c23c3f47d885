#include "ntfa/inference/bound.hpp"

#include <cmath>
#include <set>
#include <vector>

#include "ntfa/diff/ops.hpp"
#include "ntfa/error.hpp"
#include "ntfa/model/ntfa.hpp"

namespace ntfa::inference {

namespace {

Tensor standard_noise(const diff::Shape& shape, Rng& rng) {
  Tensor out(shape);
  for (double& x : out.values()) x = rng.normal();
  return out;
}

}  // namespace

Var elbo_iwae(Binding& bind, const model::GenerativeParams& params, const VariationalState& q,
              const StudyDataset& dataset, std::span<const std::size_t> batch,
              const TrialCoverage& coverage, const BoundOptions& options, Rng& rng) {
  if (batch.empty()) throw ContractError("elbo_iwae: empty batch");
  if (options.particles == 0) throw ContractError("elbo_iwae: need at least one particle");
  if (q.weights.size() != dataset.trials.size() ||
      q.participant_embeddings.size() != dataset.num_participants ||
      q.stimulus_embeddings.size() != dataset.num_stimuli) {
    throw DimensionError("elbo_iwae: variational state does not match the dataset");
  }
  std::set<std::size_t> participants;
  std::set<std::size_t> stimuli;
  model::TermWeights weights{std::vector<double>(dataset.num_participants, 0.0),
                             std::vector<double>(dataset.num_stimuli, 0.0)};
  for (std::size_t n : batch) {
    const Trial& t = dataset.trials.at(n);
    participants.insert(t.participant);
    stimuli.insert(t.stimulus);
    weights.participant[t.participant] += 1.0;
    weights.stimulus[t.stimulus] += 1.0;
  }
  for (std::size_t p : participants) {
    const std::size_t total = coverage.participant.at(p);
    if (total == 0) throw ContractError("elbo_iwae: batch participant missing from coverage");
    weights.participant[p] /= static_cast<double>(total);
  }
  for (std::size_t s : stimuli) {
    const std::size_t total = coverage.stimulus.at(s);
    if (total == 0) throw ContractError("elbo_iwae: batch stimulus missing from coverage");
    weights.stimulus[s] /= static_cast<double>(total);
  }

  const model::JointOptions joint{options.include_likelihood, &weights};
  std::vector<Var> log_weights;
  for (std::size_t l = 0; l < options.particles; ++l) {
    model::LatentVars lv;
    lv.participant_embeddings.resize(dataset.num_participants);
    lv.stimulus_embeddings.resize(dataset.num_stimuli);
    lv.centers.resize(dataset.num_participants);
    lv.log_widths.resize(dataset.num_participants);
    lv.weights.resize(dataset.trials.size());
    std::vector<Var> log_q;
    auto sample = [&](const NormalParams& np, double weight) {
      const Var mean = bind(np.mean);
      const Var log_scale = bind(np.log_scale);
      const Var z = diff::reparam_sample(mean, log_scale, standard_noise(np.mean.shape(), rng));
      const Var lp = diff::gaussian_logpdf(z, mean, log_scale);
      log_q.push_back(weight == 1.0 ? lp : diff::scale(lp, weight));
      return z;
    };
    for (std::size_t p : participants) {
      const double w = weights.participant[p];
      lv.participant_embeddings[p] = sample(q.participant_embeddings[p], w);
      lv.centers[p] = sample(q.centers[p], w);
      lv.log_widths[p] = sample(q.log_widths[p], w);
    }
    for (std::size_t s : stimuli) {
      lv.stimulus_embeddings[s] = sample(q.stimulus_embeddings[s], weights.stimulus[s]);
    }
    for (std::size_t n : batch) lv.weights[n] = sample(q.weights[n], 1.0);

    const Var log_p = model::log_joint(bind, params, dataset, batch, lv, joint);
    log_weights.push_back(diff::sub(log_p, diff::sum(diff::stack(log_q))));
  }
  if (log_weights.size() == 1) return log_weights.front();
  const Var lse = diff::logsumexp(diff::stack(log_weights));
  return diff::add_constant(lse, -std::log(static_cast<double>(options.particles)));
}

double elbo_iwae(const model::GenerativeParams& params, const VariationalState& q,
                 const StudyDataset& dataset, std::span<const std::size_t> batch,
                 const BoundOptions& options, Rng& rng) {
  diff::Graph g;
  Binding bind(g, false);
  return elbo_iwae(bind, params, q, dataset, batch, count_coverage(dataset, batch), options, rng)
      .item();
}

}  // namespace ntfa::inference
