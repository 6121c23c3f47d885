#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ntfa/data.hpp"

namespace ntfa::analysis {

using diff::Tensor;

/// Design matrix for classification: one row per trial.
struct LabeledFeatures {
  Tensor features;                  // N x F
  std::vector<std::size_t> labels;  // class id per row
  std::vector<std::size_t> groups;  // run id per row, used by leave-one-run-out
  std::vector<std::string> class_names;

  std::size_t rows() const { return labels.size(); }
  std::size_t class_count() const;
  /// Equal row counts and labels within class_count().  Throws ContractError.
  void validate() const;
};

/// One-way ANOVA F statistic of every column.  A column with zero
/// within-class variance and non-zero between-class variance gets +inf; a
/// constant column gets 0.
std::vector<double> anova_f(const Tensor& features, std::span<const std::size_t> labels);

/// Indices of the `count` columns with the largest F, ties (including
/// infinities) broken by lower index.  `count` is clipped to the column count.
std::vector<std::size_t> anova_f_select(const Tensor& features,
                                        std::span<const std::size_t> labels,
                                        std::size_t count = 500);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  double score(std::span<const double> x) const;
};

/// Minimizes (1/2)|w|^2 + C sum_i hinge(y_i (w.x_i + b)) by stochastic
/// subgradient steps of size 1 / (lambda t), lambda = 1 / (C n), over a fixed
/// number of epochs with a seeded shuffle.  The bias is an extra constant
/// feature and shares the penalty.  Returns the average of the iterates over
/// the second half of the run.  Labels are +1 / -1.
LinearModel linear_svm_train(const Tensor& x, std::span<const int> y, double c = 1.0,
                             std::size_t epochs = 10000, std::uint64_t seed = 0);

/// Area under the ROC curve by the Mann-Whitney statistic with average ranks
/// for ties.  `positive[i]` marks the positive class.
double auc(std::span<const double> scores, const std::vector<bool>& positive);

enum class CvScheme { leave_one_run_out, stratified_kfold };

const char* to_string(CvScheme scheme);
CvScheme scheme_from_string(const std::string& text);

struct MvpaOptions {
  CvScheme scheme = CvScheme::stratified_kfold;
  std::size_t folds = 3;
  /// ANOVA selection of `select_count` columns inside each training fold.
  bool select_features = false;
  std::size_t select_count = 500;
  double svm_c = 1.0;
  std::size_t svm_epochs = 10000;
  std::uint64_t seed = 0;
};

struct FoldResult {
  std::size_t class_id = 0;
  std::size_t fold = 0;
  double auc = 0.0;
  std::vector<std::size_t> selected;  // empty without feature selection
};

struct ClassSummary {
  std::size_t class_id = 0;
  std::string name;
  double mean_auc = 0.0;
  double sd_auc = 0.0;  // sample standard deviation across folds
  std::size_t folds = 0;
};

struct MvpaResult {
  std::vector<FoldResult> folds;
  std::vector<ClassSummary> classes;
};

/// Test-fold assignment per row.  Leave-one-run-out gives one fold per
/// distinct group (in ascending group order); the stratified scheme deals
/// each class's rows, in seeded random order, round-robin over the folds.
/// Throws ContractError when there are fewer groups or rows per class than
/// folds.
std::vector<std::size_t> assign_folds(const LabeledFeatures& data, const MvpaOptions& options,
                                      std::size_t* fold_count = nullptr);

/// One-vs-rest linear classifiers evaluated by AUC on every test fold.  Folds
/// whose test rows hold only one side of a one-vs-rest split are skipped.
MvpaResult mvpa_run(const LabeledFeatures& data, const MvpaOptions& options);

/// CSV with header "class,fold,auc".
std::string mvpa_results_csv(const MvpaResult& result, std::span<const std::string> names);

/// Pearson correlation between the columns of a T x K matrix.  Entries that
/// involve a constant column are 0, including its diagonal entry.
Tensor fc_matrix(const Tensor& weights);

/// Strict upper triangle of each K x K matrix, row-major, as feature rows.
Tensor upper_triangle_features(std::span<const Tensor> matrices);

/// Classifies trials from their connectivity matrices with the MVPA
/// machinery.
MvpaResult fc_classify(std::span<const Tensor> fc_matrices, std::span<const std::size_t> labels,
                       std::span<const std::size_t> groups,
                       std::span<const std::string> class_names, const MvpaOptions& options);

/// Task trials with their class (stimulus label, classes numbered in order of
/// first appearance) and run.
struct TaskLabels {
  std::vector<std::size_t> trials;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> groups;
  std::vector<std::string> class_names;
};

TaskLabels task_labels(const StudyDataset& dataset);

/// Time-averaged rows of `per_trial[n]` for every task trial n.
LabeledFeatures task_features(const StudyDataset& dataset, std::span<const Tensor> per_trial);

/// Rows of column means, one per matrix (time-averaged T x K weights or
/// T x V voxel data).
Tensor time_average_rows(std::span<const Tensor> matrices);

}  // namespace ntfa::analysis
