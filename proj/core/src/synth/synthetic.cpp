#include "ntfa/synth/synthetic.hpp"

#include <cmath>

#include "ntfa/error.hpp"
#include "ntfa/rng.hpp"

namespace ntfa::synth {

SynthDesign SynthDesign::defaults() {
  SynthDesign d;
  d.stimulus_means = {{1.0, 0.0}, {2.0, 0.0}};
  d.stimulus_sd = {{0.05, 0.05}, {0.05, 0.05}};
  d.participant_means = {{1.0, 0.0}, {1.3, 0.0}, {1.6, 0.0}};
  d.participant_sd = {{0.05, 0.05}, {0.05, 0.05}, {0.05, 0.05}};
  // Lattice indices (4,4,4), (4,13,13), (12,13,4) of the 18^3 default grid.
  d.centers = {{-4.5, -4.5, -4.5}, {-4.5, 4.5, 4.5}, {3.5, 4.5, -4.5}};
  d.width_mean = std::log(8.0);
  return d;
}

std::size_t SynthDesign::embedding_dim() const {
  return stimulus_means.empty() ? 0 : stimulus_means.front().size();
}

void SynthDesign::validate() const {
  if (groups == 0 || participants_per_group == 0 || categories == 0 ||
      stimuli_per_category == 0 || time_points == 0) {
    throw ContractError("synth design: counts must be positive");
  }
  if (centers.empty()) throw ContractError("synth design: need at least one factor center");
  if (voxels < centers.size()) throw ContractError("synth design: fewer voxels than factors");
  const std::size_t d = embedding_dim();
  if (d == 0) throw ContractError("synth design: embedding dimension must be positive");
  auto check = [&](const std::vector<std::vector<double>>& rows, std::size_t count,
                   const char* what, bool scale) {
    if (rows.size() != count) {
      throw ContractError(std::string("synth design: wrong number of rows in ") + what);
    }
    for (const auto& row : rows) {
      if (row.size() != d) throw ContractError(std::string("synth design: ") + what + " is not D-wide");
      for (double x : row) {
        if (!std::isfinite(x) || (scale && x < 0.0)) {
          throw ContractError(std::string("synth design: invalid entry in ") + what);
        }
      }
    }
  };
  check(stimulus_means, categories, "stimulus_means", false);
  check(stimulus_sd, categories, "stimulus_sd", true);
  check(participant_means, groups, "participant_means", false);
  check(participant_sd, groups, "participant_sd", true);
  for (double s : {width_sd, weight_sd, noise_sd, task_gain_sd}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ContractError("synth design: scales must be >= 0");
  }
  if (!std::isfinite(width_mean)) throw ContractError("synth design: width mean must be finite");
}

VoxelGrid make_voxel_grid(std::size_t voxels) {
  if (voxels == 0) throw ContractError("voxel grid: need at least one voxel");
  std::size_t side = 1;
  while (side * side * side < voxels) ++side;
  const double offset = (static_cast<double>(side) - 1.0) / 2.0;
  VoxelGrid grid{Tensor({voxels, 3}, 0.0)};
  for (std::size_t v = 0; v < voxels; ++v) {
    grid.coords.at(v, 0) = static_cast<double>(v / (side * side)) - offset;
    grid.coords.at(v, 1) = static_cast<double>((v / side) % side) - offset;
    grid.coords.at(v, 2) = static_cast<double>(v % side) - offset;
  }
  return grid;
}

namespace {

Tensor draw_embedding(const std::vector<double>& mean, const std::vector<double>& sd, Rng& rng) {
  Tensor z({mean.size()}, 0.0);
  for (std::size_t i = 0; i < mean.size(); ++i) z[i] = rng.normal(mean[i], sd[i]);
  return z;
}

}  // namespace

DesignEmbeddings sample_design_embeddings(const SynthDesign& design, std::uint64_t seed) {
  design.validate();
  Rng rng = Rng::derive(seed, 1);
  DesignEmbeddings out;
  for (std::size_t c = 0; c < design.categories; ++c) {
    for (std::size_t i = 0; i < design.stimuli_per_category; ++i) {
      out.stimuli.push_back(draw_embedding(design.stimulus_means[c], design.stimulus_sd[c], rng));
    }
  }
  for (std::size_t g = 0; g < design.groups; ++g) {
    for (std::size_t i = 0; i < design.participants_per_group; ++i) {
      out.participants.push_back(
          draw_embedding(design.participant_means[g], design.participant_sd[g], rng));
    }
  }
  return out;
}

SyntheticStudy generate_synthetic(const SynthDesign& design) {
  design.validate();
  const std::size_t k_count = design.factors();
  const std::size_t t_count = design.time_points;
  const std::size_t v_count = design.voxels;
  const std::size_t p_count = design.participants();
  const std::size_t s_task = design.task_stimuli();
  const std::size_t rest = s_task;

  SyntheticStudy out;
  StudyDataset& ds = out.dataset;
  GroundTruth& gt = out.truth;
  ds.num_participants = p_count;
  ds.num_stimuli = s_task + 1;
  ds.grid = make_voxel_grid(v_count);

  const DesignEmbeddings emb = sample_design_embeddings(design, design.seed);
  gt.participant_embeddings = emb.participants;
  gt.stimulus_embeddings = emb.stimuli;
  gt.stimulus_embeddings.push_back(Tensor({design.embedding_dim()}, 0.0));
  for (std::size_t g = 0; g < design.groups; ++g) {
    for (std::size_t i = 0; i < design.participants_per_group; ++i) {
      gt.participant_group.push_back(g);
      ds.participant_labels.push_back("group" + std::to_string(g + 1));
    }
  }
  for (std::size_t c = 0; c < design.categories; ++c) {
    gt.category_names.push_back("Task" + std::to_string(c + 1));
  }
  for (std::size_t s = 0; s < s_task; ++s) {
    gt.stimulus_category.push_back(s / design.stimuli_per_category);
    ds.stimulus_labels.push_back(gt.category_names[s / design.stimuli_per_category]);
  }
  gt.stimulus_category.push_back(design.categories);
  ds.stimulus_labels.push_back("Rest");

  Rng geometry = Rng::derive(design.seed, 2);
  gt.centers = Tensor({k_count, 3}, 0.0);
  gt.log_widths = Tensor({k_count}, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t a = 0; a < 3; ++a) gt.centers.at(k, a) = design.centers[k][a];
    gt.log_widths[k] = geometry.normal(design.width_mean, design.width_sd);
  }
  // F is K x V; kept dense because every participant shares it.
  Tensor factors({k_count, v_count}, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double width = std::exp(gt.log_widths[k]);
    for (std::size_t v = 0; v < v_count; ++v) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        const double d = ds.grid.coords.at(v, a) - gt.centers.at(k, a);
        d2 += d * d;
      }
      factors.at(k, v) = std::exp(-d2 / width);
    }
  }

  // Task stimuli alternate between categories: 0, N_C, 2 N_C, ..., 1, N_C + 1, ...
  std::vector<std::size_t> task_order;
  for (std::size_t i = 0; i < design.stimuli_per_category; ++i) {
    for (std::size_t c = 0; c < design.categories; ++c) {
      task_order.push_back(c * design.stimuli_per_category + i);
    }
  }

  Rng noise = Rng::derive(design.seed, 3);
  for (std::size_t p = 0; p < p_count; ++p) {
    std::vector<std::size_t> blocks{rest};
    for (std::size_t s : task_order) {
      blocks.push_back(s);
      blocks.push_back(rest);
    }
    for (std::size_t s : blocks) {
      double mean = 0.0;
      for (std::size_t i = 0; i < design.embedding_dim(); ++i) {
        mean += gt.participant_embeddings[p][i] * gt.stimulus_embeddings[s][i];
      }
      Tensor w({t_count, k_count}, 0.0);
      for (std::size_t t = 0; t < t_count; ++t) {
        const double gain = s == rest ? 1.0 : 1.0 + design.task_gain_sd * noise.normal();
        for (std::size_t k = 0; k < k_count; ++k) {
          w.at(t, k) = mean * gain + design.weight_sd * noise.normal();
        }
      }
      Tensor y({t_count, v_count}, 0.0);
      for (std::size_t t = 0; t < t_count; ++t) {
        double* row = y.data() + t * v_count;
        for (std::size_t k = 0; k < k_count; ++k) {
          const double wk = w.at(t, k);
          const double* f = factors.data() + k * v_count;
          for (std::size_t v = 0; v < v_count; ++v) row[v] += wk * f[v];
        }
        for (std::size_t v = 0; v < v_count; ++v) row[v] += design.noise_sd * noise.normal();
      }
      ds.trials.push_back(Trial{p, s, p, s == rest ? BlockType::rest : BlockType::task, std::move(y)});
      gt.weights.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace ntfa::synth
