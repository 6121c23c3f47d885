#include <benchmark/benchmark.h>

#include <vector>

#include "ntfa/diff/binding.hpp"
#include "ntfa/diff/graph.hpp"
#include "ntfa/diff/ops.hpp"
#include "ntfa/inference/bound.hpp"
#include "ntfa/inference/fit.hpp"
#include "ntfa/synth/synthetic.hpp"

using namespace ntfa;
using diff::Graph;
using diff::Tensor;

namespace {

Tensor normal_tensor(diff::Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.normal();
  return t;
}

void BM_RbfFactors(benchmark::State& state) {
  const std::size_t voxels = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor grid = synth::make_voxel_grid(voxels).coords;
  const Tensor centers = normal_tensor({3, 3}, rng);
  const Tensor widths({3}, 2.0);
  for (auto _ : state) {
    Graph g;
    diff::Var f = diff::rbf_factors(g.parameter(centers), g.parameter(widths), grid);
    g.backward(diff::sum(f));
    benchmark::DoNotOptimize(g.grad(f));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(voxels));
}
BENCHMARK(BM_RbfFactors)->Arg(1000)->Arg(5000);

void BM_FusedLikelihood(benchmark::State& state) {
  const std::size_t voxels = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor data = normal_tensor({20, voxels}, rng);
  const Tensor weights = normal_tensor({20, 3}, rng);
  const Tensor factors = normal_tensor({3, voxels}, rng);
  for (auto _ : state) {
    Graph g;
    diff::Var ll = diff::gaussian_linear_loglik(data, g.parameter(weights), g.parameter(factors),
                                                g.parameter(Tensor::scalar(0.0)));
    g.backward(ll);
    benchmark::DoNotOptimize(ll.item());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(20 * voxels));
}
BENCHMARK(BM_FusedLikelihood)->Arg(1000)->Arg(5000);

void BM_BoundStep(benchmark::State& state) {
  synth::SynthDesign design = synth::SynthDesign::defaults();
  design.voxels = static_cast<std::size_t>(state.range(0));
  const synth::SyntheticStudy study = synth::generate_synthetic(design);
  const std::vector<std::size_t> all = study.dataset.all_trials();
  inference::TrainConfig config;
  Rng init(3);
  const inference::FitResult fit = inference::initialize_fit(study.dataset, all, config, {}, init);
  const TrialCoverage coverage = count_coverage(study.dataset, all);
  const std::vector<std::size_t> batch(all.begin(), all.begin() + 8);
  Rng rng(4);
  for (auto _ : state) {
    Graph g;
    diff::Binding bind(g, true);
    diff::Var bound = inference::elbo_iwae(bind, fit.params, fit.state, study.dataset, batch, coverage,
                                           {1, true}, rng);
    g.backward(bound);
    benchmark::DoNotOptimize(bound.item());
  }
}
BENCHMARK(BM_BoundStep)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
