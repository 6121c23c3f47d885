#include "ntfa/inference/variational.hpp"

#include "ntfa/error.hpp"

namespace ntfa::inference {

NormalParams NormalParams::filled(diff::Shape shape, double mean, double log_scale) {
  NormalParams p{Tensor(shape, mean), Tensor(shape, log_scale)};
  return p;
}

VariationalState VariationalState::initialize(const StudyDataset& dataset,
                                              const model::GenerativeConfig& config,
                                              const Tensor& centers, const Tensor& log_widths,
                                              Rng& rng) {
  const std::size_t k = config.factors;
  const std::size_t d = config.embedding_dim;
  if (centers.size() != 3 * k || log_widths.size() != k) {
    throw DimensionError("variational init: expected K x 3 centers and K log-widths");
  }
  VariationalState q;
  auto embedding = [&] {
    NormalParams p = NormalParams::filled({d}, 0.0, -1.0);
    for (double& m : p.mean.values()) m = rng.normal(0.0, 0.1);
    return p;
  };
  for (std::size_t p = 0; p < dataset.num_participants; ++p) {
    q.participant_embeddings.push_back(embedding());
  }
  for (std::size_t s = 0; s < dataset.num_stimuli; ++s) {
    q.stimulus_embeddings.push_back(embedding());
  }
  for (std::size_t p = 0; p < dataset.num_participants; ++p) {
    q.centers.push_back(NormalParams{centers.reshaped({k, 3}), Tensor({k, 3}, -1.0)});
    q.log_widths.push_back(NormalParams{log_widths.reshaped({k}), Tensor({k}, -1.0)});
  }
  for (const Trial& t : dataset.trials) {
    q.weights.push_back(NormalParams::filled({t.time_points(), k}, 0.0, 0.0));
  }
  return q;
}

namespace {
template <typename State, typename Out>
void collect(State& q, Out& out) {
  for (auto* group : {&q.participant_embeddings, &q.stimulus_embeddings, &q.centers,
                      &q.log_widths, &q.weights}) {
    for (auto& p : *group) {
      out.push_back(&p.mean);
      out.push_back(&p.log_scale);
    }
  }
}
}  // namespace

std::vector<Tensor*> VariationalState::tensors() {
  std::vector<Tensor*> out;
  collect(*this, out);
  return out;
}

std::vector<const Tensor*> VariationalState::tensors() const {
  std::vector<const Tensor*> out;
  collect(*this, out);
  return out;
}

std::size_t VariationalState::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

std::size_t variational_parameter_count(std::size_t p, std::size_t s, std::size_t n,
                                        std::size_t t, std::size_t k, std::size_t d) {
  return 2 * d * (p + s) + p * (6 * k + 2 * k) + 2 * n * t * k;
}

}  // namespace ntfa::inference
