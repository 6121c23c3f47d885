#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ntfa/inference/fit.hpp"
#include "ntfa/model/params.hpp"
#include "ntfa/synth/synthetic.hpp"

namespace ntfa::io {

// --- key-value configuration ------------------------------------------------

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
/// Throws FormatError on a line without '=' or a repeated key.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Settings a configuration file may override.
struct RunSettings {
  inference::TrainConfig train;
  model::GenerativeConfig generative;
  std::size_t eval_particles = 100;
  std::string cv_scheme = "kfold";
  std::size_t folds = 3;
  double svm_c = 1.0;
};

/// Keys: lr_lambda, lr_theta, epochs, patience, decay, particles, batch_size,
/// seed, factors, embedding_dim, eval_particles, cv_scheme, folds, svm_c.
/// Throws FormatError for an unknown key or an unparsable value.
void apply_settings(const std::map<std::string, std::string>& values, RunSettings& settings);

// --- synthetic design and ground truth ---------------------------------------

std::string design_json(const synth::SynthDesign& design);
synth::SynthDesign parse_design_json(const std::string& text);

std::string ground_truth_json(const synth::GroundTruth& truth);
synth::GroundTruth parse_ground_truth_json(const std::string& text);

// --- metrics -----------------------------------------------------------------

struct TrialMetric {
  std::size_t trial = 0;
  std::size_t participant = 0;
  std::size_t stimulus = 0;
  double bound = 0.0;
};

struct MetricsRecord {
  std::string model;  // "ntfa" or "htfa"
  std::string split = "diagonal";
  std::uint64_t seed = 0;
  std::size_t particles = 0;
  inference::TrainConfig train;
  model::GenerativeConfig generative;
  std::size_t parameter_count = 0;
  double log_predictive = 0.0;
  std::vector<TrialMetric> per_trial;
};

std::string metrics_json(const MetricsRecord& record);
MetricsRecord parse_metrics_json(const std::string& text);

// --- model archive -------------------------------------------------------------

struct ModelArchive {
  inference::TrainConfig train;
  inference::FitResult fit;
};

/// Writes manifest.json, theta.json, lambda.json and loss_trace.json into `dir`.
void save_model(const std::filesystem::path& dir, const ModelArchive& archive);

/// Throws FormatError for a missing or inconsistent archive.
ModelArchive load_model(const std::filesystem::path& dir);

}  // namespace ntfa::io
