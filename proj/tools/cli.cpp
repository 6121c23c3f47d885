#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "ntfa/analysis/analysis.hpp"
#include "ntfa/baselines/htfa.hpp"
#include "ntfa/baselines/pca.hpp"
#include "ntfa/error.hpp"
#include "ntfa/evaluation/evaluation.hpp"
#include "ntfa/io/dataset_io.hpp"
#include "ntfa/io/embeddings.hpp"
#include "ntfa/io/matrix_file.hpp"
#include "ntfa/io/records.hpp"
#include "ntfa/io/zscore.hpp"
#include "ntfa/synth/synthetic.hpp"

namespace ntfa::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string config;
};

io::RunSettings load_settings(const Globals& g) {
  io::RunSettings s;
  if (!g.config.empty()) io::apply_settings(io::parse_key_values(io::read_text(g.config)), s);
  if (g.seed) s.train.seed = *g.seed;
  return s;
}

StudyDataset require_dataset(const std::string& path) {
  if (path.empty()) throw FormatError("no dataset path given (use --data)");
  if (!fs::exists(path)) throw FormatError("dataset path " + path + " does not exist");
  return io::load_dataset(path);
}

io::ModelArchive require_model(const std::string& path) {
  if (path.empty()) throw FormatError("no model path given (use --model)");
  if (!fs::exists(path)) throw FormatError("model path " + path + " does not exist");
  return io::load_model(path);
}

std::vector<Tensor> weight_means(const inference::VariationalState& q,
                                 const StudyDataset& dataset) {
  if (q.weights.size() != dataset.trials.size()) {
    throw FormatError("model and dataset disagree on the number of trials");
  }
  std::vector<Tensor> out;
  for (const auto& w : q.weights) out.push_back(w.mean);
  return out;
}

analysis::MvpaOptions mvpa_options(const io::RunSettings& s, const std::string& scheme) {
  analysis::MvpaOptions o;
  o.scheme = analysis::scheme_from_string(scheme.empty() ? s.cv_scheme : scheme);
  o.folds = s.folds;
  o.svm_c = s.svm_c;
  o.seed = s.train.seed;
  return o;
}

void report(std::ostream& out, const analysis::MvpaResult& r) {
  for (const auto& c : r.classes) {
    out << c.name << ": AUC " << std::fixed << std::setprecision(3) << c.mean_auc << " +/- "
        << c.sd_auc << " over " << c.folds << " folds\n";
  }
  out.unsetf(std::ios::fixed);
}

io::MetricsRecord base_metrics(const char* model, const StudyDataset& ds,
                               const std::vector<std::size_t>& test,
                               const std::vector<double>& per_trial) {
  io::MetricsRecord m;
  m.model = model;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Trial& t = ds.trials[test[i]];
    m.per_trial.push_back(io::TrialMetric{test[i], t.participant, t.stimulus, per_trial[i]});
    m.log_predictive += per_trial[i];
  }
  return m;
}

evaluation::CountConfig counts(const StudyDataset& ds, const model::GenerativeConfig& gen) {
  return evaluation::CountConfig{ds.num_participants, ds.num_stimuli, ds.trials.size(),
                                 ds.trials.empty() ? 1 : ds.trials.front().time_points(),
                                 gen.factors, gen.embedding_dim};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural topographic factor analysis"};
  app.name("ntfa");
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed for training and evaluation");
  app.add_option("--threads", g.threads, "Worker thread bound")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Key-value settings file");

  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic study");
  std::string design_arg = "default", synth_out;
  synth->add_option("--design", design_arg, "'default' or a design JSON file");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->callback([&] {
    action = [&] {
      synth::SynthDesign design = design_arg == "default"
                                      ? synth::SynthDesign::defaults()
                                      : io::parse_design_json(io::read_text(design_arg));
      if (g.seed) design.seed = *g.seed;
      const synth::SyntheticStudy study = synth::generate_synthetic(design);
      io::save_dataset(synth_out, study.dataset);
      io::write_text(fs::path(synth_out) / "ground_truth.json", io::ground_truth_json(study.truth));
      io::write_text(fs::path(synth_out) / "design.json", io::design_json(design));
      out << "wrote " << study.dataset.trials.size() << " trials (P=" << study.dataset.num_participants
          << ", S=" << study.dataset.num_stimuli << ", V=" << study.dataset.voxels() << ") to "
          << synth_out << "\n";
    };
  });

  // zscore
  auto* zscore = app.add_subcommand("zscore", "Z-score every run against its rest trials");
  std::string z_data, z_out;
  bool drop_rest = false;
  zscore->add_option("--data", z_data, "Input dataset directory");
  zscore->add_option("--out", z_out, "Output dataset directory")->required();
  zscore->add_flag("--drop-rest", drop_rest, "Omit rest trials from the output");
  zscore->callback([&] {
    action = [&] {
      io::save_dataset(z_out, io::zscore_dataset(require_dataset(z_data), !drop_rest));
      out << "wrote " << z_out << "\n";
    };
  });

  // fit
  auto* fit = app.add_subcommand("fit", "Train the model");
  std::string fit_data, fit_out, fit_split = "diagonal";
  std::optional<std::size_t> fit_epochs;
  fit->add_option("--data", fit_data, "Dataset directory");
  fit->add_option("--out", fit_out, "Model archive directory")->required();
  fit->add_option("--split", fit_split, "Training trials: 'diagonal' (held-out split) or 'all'")
      ->check(CLI::IsMember({"diagonal", "all"}));
  fit->add_option("--epochs", fit_epochs, "Override the number of epochs");
  fit->callback([&] {
    action = [&] {
      io::RunSettings s = load_settings(g);
      if (fit_epochs) s.train.epochs = *fit_epochs;
      const StudyDataset ds = require_dataset(fit_data);
      const std::vector<std::size_t> train =
          fit_split == "all" ? ds.all_trials() : evaluation::heldout_split(ds).train;
      io::ModelArchive archive{s.train, inference::fit(ds, train, s.train, s.generative,
                                                       [&](std::size_t e, double loss) {
                                                         if (e % 100 == 0 || e + 1 == s.train.epochs) {
                                                           out << "epoch " << e << " loss " << loss << "\n";
                                                         }
                                                       })};
      io::save_model(fit_out, archive);
      out << "wrote " << fit_out << "\n";
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Posterior-predictive bound on the held-out split");
  std::string eval_model, eval_data, eval_out;
  std::optional<std::size_t> eval_particles;
  eval->add_option("--model", eval_model, "Model archive directory");
  eval->add_option("--data", eval_data, "Dataset directory");
  eval->add_option("--out", eval_out, "Metrics JSON file")->required();
  eval->add_option("--particles", eval_particles, "Particles per held-out trial");
  eval->callback([&] {
    action = [&] {
      const io::RunSettings s = load_settings(g);
      const io::ModelArchive archive = require_model(eval_model);
      const StudyDataset ds = require_dataset(eval_data);
      const std::size_t particles = eval_particles.value_or(s.eval_particles);
      const std::uint64_t seed = g.seed.value_or(archive.train.seed);
      const evaluation::SplitPlan split = evaluation::heldout_split(ds);
      const auto bound = evaluation::log_predictive_bound(archive.fit.params, archive.fit.state, ds,
                                                          split.test, particles, seed);
      io::MetricsRecord m = base_metrics("ntfa", ds, split.test, bound.per_trial);
      m.seed = seed;
      m.particles = particles;
      m.train = archive.train;
      m.generative = archive.fit.params.config;
      m.parameter_count =
          evaluation::parameter_count(evaluation::ModelKind::ntfa, counts(ds, m.generative));
      io::write_text(eval_out, io::metrics_json(m));
      out << "log predictive bound " << std::setprecision(10) << m.log_predictive << "\n";
    };
  });

  // embed
  auto* embed = app.add_subcommand("embed", "Export participant and stimulus embeddings");
  std::string embed_model, embed_data, embed_csv, embed_svg;
  embed->add_option("--model", embed_model, "Model archive directory");
  embed->add_option("--data", embed_data, "Dataset directory, for labels");
  embed->add_option("--csv", embed_csv, "Output CSV file")->required();
  embed->add_option("--svg", embed_svg, "Optional scatter plot");
  embed->callback([&] {
    action = [&] {
      const io::ModelArchive archive = require_model(embed_model);
      const StudyDataset ds = embed_data.empty() ? StudyDataset{} : require_dataset(embed_data);
      const auto rows = io::export_embeddings(archive.fit.state, ds);
      io::write_text(embed_csv, io::embeddings_csv(rows));
      if (!embed_svg.empty()) io::write_text(embed_svg, io::embeddings_svg(rows));
      out << "wrote " << rows.size() << " embeddings\n";
    };
  });

  // mvpa
  auto* mvpa = app.add_subcommand("mvpa", "Classify task trials by stimulus label");
  std::string mvpa_data, mvpa_model, mvpa_out, mvpa_scheme;
  std::size_t mvpa_select = 500;
  mvpa->add_option("--data", mvpa_data, "Dataset directory");
  mvpa->add_option("--model", mvpa_model, "Use the model's time-averaged weights as features");
  mvpa->add_option("--out", mvpa_out, "Results CSV")->required();
  mvpa->add_option("--scheme", mvpa_scheme, "kfold or loro");
  mvpa->add_option("--select", mvpa_select, "Voxels kept by ANOVA selection");
  mvpa->callback([&] {
    action = [&] {
      const io::RunSettings s = load_settings(g);
      const StudyDataset ds = require_dataset(mvpa_data);
      analysis::MvpaOptions opts = mvpa_options(s, mvpa_scheme);
      analysis::LabeledFeatures features;
      if (mvpa_model.empty()) {
        std::vector<Tensor> data;
        for (const Trial& t : ds.trials) data.push_back(t.data);
        features = analysis::task_features(ds, data);
        opts.select_features = true;
        opts.select_count = mvpa_select;
      } else {
        features = analysis::task_features(ds, weight_means(require_model(mvpa_model).fit.state, ds));
      }
      const auto result = analysis::mvpa_run(features, opts);
      io::write_text(mvpa_out, analysis::mvpa_results_csv(result, features.class_names));
      report(out, result);
    };
  });

  // fc
  auto* fc = app.add_subcommand("fc", "Classify task trials from factor connectivity");
  std::string fc_model, fc_data, fc_out, fc_scheme;
  fc->add_option("--model", fc_model, "Model archive directory");
  fc->add_option("--data", fc_data, "Dataset directory");
  fc->add_option("--out", fc_out, "Results CSV")->required();
  fc->add_option("--scheme", fc_scheme, "kfold or loro");
  fc->callback([&] {
    action = [&] {
      const io::RunSettings s = load_settings(g);
      const StudyDataset ds = require_dataset(fc_data);
      const auto means = weight_means(require_model(fc_model).fit.state, ds);
      const analysis::TaskLabels labels = analysis::task_labels(ds);
      std::vector<Tensor> mats;
      for (std::size_t n : labels.trials) mats.push_back(analysis::fc_matrix(means[n]));
      const auto result = analysis::fc_classify(mats, labels.labels, labels.groups,
                                                labels.class_names, mvpa_options(s, fc_scheme));
      io::write_text(fc_out, analysis::mvpa_results_csv(result, labels.class_names));
      report(out, result);
    };
  });

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Baseline models");
  baseline->require_subcommand(1);
  auto* pca = baseline->add_subcommand("pca", "Two-component PCA of time-averaged trials");
  std::string pca_data, pca_out;
  pca->add_option("--data", pca_data, "Dataset directory");
  pca->add_option("--out", pca_out, "Coordinates CSV")->required();
  pca->callback([&] {
    action = [&] {
      const StudyDataset ds = require_dataset(pca_data);
      const Tensor coords = baselines::pca_timeavg_embed(ds);
      std::ostringstream csv;
      csv.precision(17);
      csv << "trial,participant,stimulus,pc1,pc2\n";
      for (std::size_t n = 0; n < ds.trials.size(); ++n) {
        csv << n << ',' << ds.trials[n].participant << ',' << ds.trials[n].stimulus << ','
            << coords.at(n, 0) << ',' << coords.at(n, 1) << '\n';
      }
      io::write_text(pca_out, csv.str());
      out << "wrote " << pca_out << "\n";
    };
  });
  auto* htfa = baseline->add_subcommand("htfa", "Hierarchical baseline on the held-out split");
  std::string htfa_data, htfa_out;
  std::optional<std::size_t> htfa_particles, htfa_epochs;
  htfa->add_option("--data", htfa_data, "Dataset directory");
  htfa->add_option("--out", htfa_out, "Metrics JSON file")->required();
  htfa->add_option("--particles", htfa_particles, "Particles per held-out trial");
  htfa->add_option("--epochs", htfa_epochs, "Override the number of epochs");
  htfa->callback([&] {
    action = [&] {
      io::RunSettings s = load_settings(g);
      if (htfa_epochs) s.train.epochs = *htfa_epochs;
      const StudyDataset ds = require_dataset(htfa_data);
      const evaluation::SplitPlan split = evaluation::heldout_split(ds);
      const auto fitted = baselines::htfa_fit(ds, split.train, s.generative.factors, s.train);
      const std::size_t particles = htfa_particles.value_or(s.eval_particles);
      std::vector<double> per_trial;
      baselines::htfa_log_predictive(fitted.state, ds, split.test, particles, s.train.seed,
                                     &per_trial);
      io::MetricsRecord m = base_metrics("htfa", ds, split.test, per_trial);
      m.seed = s.train.seed;
      m.particles = particles;
      m.train = s.train;
      m.generative = s.generative;
      m.parameter_count =
          evaluation::parameter_count(evaluation::ModelKind::htfa, counts(ds, s.generative));
      io::write_text(htfa_out, io::metrics_json(m));
      out << "log predictive bound " << std::setprecision(10) << m.log_predictive << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;
  if (!action) {
    err << app.help();
    return kUsage;
  }
  try {
    action();
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kSuccess;
}

}  // namespace ntfa::cli
