#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "ntfa/error.hpp"
#include "ntfa/evaluation/evaluation.hpp"
#include "ntfa/model/ntfa.hpp"
#include "ntfa/synth/synthetic.hpp"
#include "toy_model.hpp"

using namespace ntfa;
using namespace ntfa::evaluation;
using ntfa::testing::random_tensor;

namespace {

StudyDataset grid_study(std::size_t participants, std::size_t stimuli) {
  StudyDataset ds;
  ds.num_participants = participants;
  ds.num_stimuli = stimuli;
  ds.grid.coords = Tensor({2, 3}, 0.0);
  ds.grid.coords.at(1, 0) = 1.0;
  for (std::size_t p = 0; p < participants; ++p) {
    for (std::size_t s = 0; s < stimuli; ++s) {
      Trial t;
      t.participant = p;
      t.stimulus = s;
      t.data = Tensor({1, 2}, 0.0);
      ds.trials.push_back(t);
    }
  }
  return ds;
}

/// Zero network weights and floor log-scales put every draw within exp(-8) of
/// the network mean.
void collapse(model::GenerativeParams& params, Rng& rng) {
  for (model::Mlp* net : {&params.factor_net, &params.weight_net}) {
    for (auto& layer : net->layers) layer.weight.fill(0.0);
  }
  Tensor& fb = params.factor_net.layers.back().bias;
  Tensor& wb = params.weight_net.layers.back().bias;
  for (std::size_t k = 0; k < params.config.factors; ++k) {
    for (std::size_t slot = 0; slot < 4; ++slot) {
      fb[model::factor_output_index(k, slot, 0)] = rng.normal(0.0, 1.0);
      fb[model::factor_output_index(k, slot, 1)] = -100.0;
    }
    wb[model::weight_output_index(k, 0)] = rng.normal(0.0, 1.0);
    wb[model::weight_output_index(k, 1)] = -100.0;
  }
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("diagonal split of a 2 x 2 design") {
  StudyDataset ds = grid_study(2, 2);
  SplitPlan plan = heldout_split(ds);
  std::set<std::pair<std::size_t, std::size_t>> held;
  for (std::size_t n : plan.test) held.insert({ds.trials[n].participant, ds.trials[n].stimulus});
  CHECK(held == std::set<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}});
}

TEST_CASE("participant 8 of a 9 x 8 design holds out stimulus 0") {
  StudyDataset ds = grid_study(9, 8);
  SplitPlan plan = heldout_split(ds);
  std::vector<std::size_t> held_for_8;
  for (std::size_t n : plan.test) {
    if (ds.trials[n].participant == 8) held_for_8.push_back(ds.trials[n].stimulus);
  }
  CHECK(held_for_8 == std::vector<std::size_t>{0});
  CHECK(plan.test.size() == 9);
}

TEST_CASE("diagonal split needs two participants and two stimuli") {
  CHECK_THROWS_AS(heldout_split(grid_study(1, 3)), ContractError);
  CHECK_THROWS_AS(heldout_split(grid_study(3, 1)), ContractError);
}

TEST_CASE("diagonal split reports a participant left without training trials") {
  StudyDataset ds = grid_study(3, 3);
  // Participant 1 keeps only its diagonal trial (1, 1).
  std::vector<Trial> kept;
  for (const Trial& t : ds.trials) {
    if (t.participant != 1 || t.stimulus == 1) kept.push_back(t);
  }
  ds.trials = kept;
  try {
    heldout_split(ds);
    FAIL("expected a contract error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("participant 1") != std::string::npos);
  }
}

TEST_CASE("diagonal split is a partition with full training coverage") {
  synth::SynthDesign design = synth::SynthDesign::defaults();
  design.voxels = 30;
  design.time_points = 2;
  synth::SyntheticStudy study = synth::generate_synthetic(design);
  const StudyDataset& ds = study.dataset;
  SplitPlan plan = heldout_split(ds);
  std::vector<std::size_t> all = plan.train;
  all.insert(all.end(), plan.test.begin(), plan.test.end());
  std::sort(all.begin(), all.end());
  CHECK(all == ds.all_trials());
  for (std::size_t n : plan.test) {
    CHECK(ds.trials[n].block == BlockType::task);
    CHECK(ds.trials[n].participant % 8 == ds.trials[n].stimulus);
  }
  TrialCoverage cov = count_coverage(ds, plan.train);
  for (std::size_t c : cov.participant) CHECK(c > 0);
  for (std::size_t c : cov.stimulus) CHECK(c > 0);
}

TEST_CASE("predictive bound approaches the log-likelihood when every scale sits at the floor") {
  Rng rng(1);
  model::GenerativeConfig config;
  config.factors = 2;
  config.embedding_dim = 2;
  model::GenerativeParams params = model::GenerativeParams::initialize(config, rng, -0.5);
  collapse(params, rng);
  StudyDataset ds = grid_study(2, 2);
  ds.grid.coords = random_tensor({4, 3}, rng);
  for (Trial& t : ds.trials) t.data = random_tensor({3, 4}, rng);
  inference::VariationalState q = inference::VariationalState::initialize(
      ds, config, random_tensor({2, 3}, rng), random_tensor({2}, rng), rng);
  const std::vector<std::size_t> test = {0, 3};
  PredictiveBound bound = log_predictive_bound(params, q, ds, test, 7, 3);
  const model::FactorPrior fp = model::eta_f_forward(params, Tensor({2}, 0.0));
  const model::WeightPrior wp = model::eta_w_forward(params, Tensor({2}, 0.0), Tensor({2}, 0.0));
  const Tensor f = model::rbf_factor_matrix(fp.center_mean, fp.width_mean, ds.grid);
  double total = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    Tensor w({3, 2});
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t k = 0; k < 2; ++k) w.at(t, k) = wp.mean[k];
    }
    const double expected = model::log_likelihood(ds.trials[test[i]].data, w, f, -0.5);
    CHECK(bound.per_trial[i] == doctest::Approx(expected).epsilon(1e-4));
    total += bound.per_trial[i];
  }
  CHECK(bound.total == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("duplicating a test trial doubles its contribution") {
  ntfa::testing::ToyModel toy = ntfa::testing::make_toy(2, 0.4);
  const std::vector<std::size_t> once = {0};
  const std::vector<std::size_t> twice = {0, 0};
  const double single = log_predictive_bound(toy.params, toy.q, toy.dataset, once, 20, 9).total;
  const double doubled = log_predictive_bound(toy.params, toy.q, toy.dataset, twice, 20, 9).total;
  CHECK(doubled == 2.0 * single);
}

TEST_CASE("predictive bound stays below the quadrature predictive density") {
  std::size_t covered = 0;
  const std::size_t seeds = 100;
  ntfa::testing::ToyModel toy = ntfa::testing::make_toy(3, 1.4);
  const double reference = ntfa::testing::quadrature_log_predictive(toy, 12);
  const std::vector<std::size_t> test = {0};
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    if (log_predictive_bound(toy.params, toy.q, toy.dataset, test, 100, seed).total <= reference) {
      ++covered;
    }
  }
  CHECK(static_cast<double>(covered) >= 0.99 * static_cast<double>(seeds));
}

TEST_CASE("predictive bound needs embeddings for the test trials") {
  ntfa::testing::ToyModel toy = ntfa::testing::make_toy(4, 0.1);
  toy.q.stimulus_embeddings.clear();
  const std::vector<std::size_t> test = {0};
  CHECK_THROWS_AS(log_predictive_bound(toy.params, toy.q, toy.dataset, test, 5, 1), ContractError);
}

TEST_CASE("predictive mean follows the network means at the embedding means") {
  Rng rng(5);
  model::GenerativeConfig config;
  config.factors = 3;
  config.embedding_dim = 2;
  model::GenerativeParams params = model::GenerativeParams::initialize(config, rng, 0.0);
  for (Tensor* t : params.tensors()) {
    for (double& v : t->values()) v = rng.normal(0.0, 0.4);
  }
  StudyDataset ds = grid_study(2, 2);
  ds.grid.coords = random_tensor({6, 3}, rng);
  inference::VariationalState q = inference::VariationalState::initialize(
      ds, config, random_tensor({3, 3}, rng), random_tensor({3}, rng), rng);
  for (auto& e : q.participant_embeddings) e.log_scale.fill(-100.0);
  for (auto& e : q.stimulus_embeddings) e.log_scale.fill(-100.0);
  const Tensor mean = posterior_predictive_mean(params, q, ds.grid, 1, 0);
  CHECK(mean.shape() == diff::Shape{6});
  const Tensor& zp = q.participant_embeddings[1].mean;
  const Tensor& zs = q.stimulus_embeddings[0].mean;
  const model::FactorPrior fp = model::eta_f_forward(params, zp);
  const model::WeightPrior wp = model::eta_w_forward(params, zp, zs);
  const Tensor f = model::rbf_factor_matrix(fp.center_mean, fp.width_mean, ds.grid);
  for (std::size_t v = 0; v < 6; ++v) {
    double expected = 0.0;
    for (std::size_t k = 0; k < 3; ++k) expected += wp.mean[k] * f.at(k, v);
    CHECK(mean[v] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("parameter counts of the synthetic configuration") {
  CountConfig cfg{9, 8, 153, 20, 3, 2};
  const std::size_t ntfa = parameter_count(ModelKind::ntfa, cfg);
  const std::size_t htfa = parameter_count(ModelKind::htfa, cfg);
  CHECK(ntfa == 559 + 68 + 216 + 18360);
  CHECK(htfa == 24 + 153 * 24 + 2 * 153 * 20 * 3);
  CHECK(std::abs(static_cast<double>(ntfa) - 1.90e4) <= 0.1 * 1.90e4);
  CHECK(std::abs(static_cast<double>(htfa) - 2.16e4) <= 0.1 * 2.16e4);
  CHECK(ntfa < htfa);
}

TEST_CASE("parameter count of the all-ones configuration") {
  // Factor network 1 -> 2 -> 4 -> 8: (2 + 2) + (8 + 4) + (32 + 8) + 2 slopes = 58.
  // Weight network 2 -> 4 -> 8 -> 2: (8 + 4) + (32 + 8) + (16 + 2) + 2 slopes = 72.
  // Noise scale 1.  Posterior: z_p 2, z_s 2, centers 6, log-width 2, weight 2 = 14.
  CountConfig cfg{1, 1, 1, 1, 1, 1};
  CHECK(parameter_count(ModelKind::ntfa, cfg) == 58 + 72 + 1 + 14);
  // Template 3 + 1 pairs, one trial's geometry 3 + 1 pairs, one weight pair.
  CHECK(parameter_count(ModelKind::htfa, cfg) == 8 + 8 + 2);
}

}
