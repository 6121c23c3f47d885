#include "ntfa/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ntfa/error.hpp"

namespace ntfa::analysis {

std::size_t LabeledFeatures::class_count() const {
  std::size_t n = class_names.size();
  for (std::size_t y : labels) n = std::max(n, y + 1);
  return n;
}

void LabeledFeatures::validate() const {
  if (features.rank() != 2) throw DimensionError("features: expected an N x F matrix");
  if (features.rows() != labels.size()) throw DimensionError("features: one label per row");
  if (!groups.empty() && groups.size() != labels.size()) {
    throw DimensionError("features: one group per row");
  }
  if (!features.all_finite()) throw ContractError("features: non-finite entries");
}

std::vector<double> anova_f(const Tensor& x, std::span<const std::size_t> labels) {
  if (x.rank() != 2 || x.rows() != labels.size()) {
    throw DimensionError("anova_f: one label per feature row required");
  }
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t y : labels) ++counts[y];
  if (counts.size() < 2) throw ContractError("anova_f: need at least two classes");
  for (const auto& [label, n] : counts) {
    if (n < 2) throw ContractError("anova_f: every class needs at least two rows");
  }
  const std::size_t n = x.rows();
  const std::size_t cols = x.cols();
  const double k = static_cast<double>(counts.size());
  std::vector<double> out(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    std::map<std::size_t, double> sums;
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sums[labels[i]] += x.at(i, j);
      grand += x.at(i, j);
    }
    grand /= static_cast<double>(n);
    double between = 0.0;
    for (const auto& [label, s] : sums) {
      const double mean = s / static_cast<double>(counts[label]);
      between += static_cast<double>(counts[label]) * (mean - grand) * (mean - grand);
    }
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mean = sums[labels[i]] / static_cast<double>(counts[labels[i]]);
      within += (x.at(i, j) - mean) * (x.at(i, j) - mean);
    }
    if (within <= 0.0) {
      out[j] = between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
      out[j] = (between / (k - 1.0)) / (within / (static_cast<double>(n) - k));
    }
  }
  return out;
}

std::vector<std::size_t> anova_f_select(const Tensor& x, std::span<const std::size_t> labels,
                                        std::size_t count) {
  const std::vector<double> f = anova_f(x, labels);
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
  idx.resize(std::min(count, idx.size()));
  return idx;
}

double LinearModel::score(std::span<const double> x) const {
  if (x.size() != weights.size()) throw DimensionError("linear model: feature size mismatch");
  double s = bias;
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
  return s;
}

LinearModel linear_svm_train(const Tensor& x, std::span<const int> y, double c,
                             std::size_t epochs, std::uint64_t seed) {
  if (x.rank() != 2 || x.rows() != y.size()) throw DimensionError("svm: one label per row");
  if (!(c > 0.0)) throw ContractError("svm: C must be positive");
  bool has_pos = false;
  bool has_neg = false;
  for (int label : y) {
    if (label == 1) has_pos = true;
    else if (label == -1) has_neg = true;
    else throw ContractError("svm: labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw ContractError("svm: both classes must be present");
  if (epochs == 0) throw ContractError("svm: need at least one epoch");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const double lambda = 1.0 / (c * static_cast<double>(n));
  // w[d] is the bias on a constant feature of 1.
  std::vector<double> w(d + 1, 0.0);
  std::vector<double> avg(d + 1, 0.0);
  std::size_t averaged = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 engine(seed);
  std::size_t t = 0;
  const std::size_t average_from = epochs / 2;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), engine);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double* row = x.data() + i * d;
      double margin = w[d];
      for (std::size_t j = 0; j < d; ++j) margin += w[j] * row[j];
      margin *= y[i];
      const double shrink = 1.0 - eta * lambda;
      for (double& wj : w) wj *= shrink;
      if (margin < 1.0) {
        const double step = eta * y[i];
        for (std::size_t j = 0; j < d; ++j) w[j] += step * row[j];
        w[d] += step;
      }
      if (epoch >= average_from) {
        for (std::size_t j = 0; j <= d; ++j) avg[j] += w[j];
        ++averaged;
      }
    }
  }
  LinearModel model;
  model.weights.resize(d);
  for (std::size_t j = 0; j < d; ++j) model.weights[j] = avg[j] / static_cast<double>(averaged);
  model.bias = avg[d] / static_cast<double>(averaged);
  return model;
}

double auc(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw DimensionError("auc: one label per score");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) rank[idx[m]] = r;
    i = j + 1;
  }
  double n_pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (positive[i]) {
      n_pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw ContractError("auc: both classes must be present");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

const char* to_string(CvScheme scheme) {
  return scheme == CvScheme::leave_one_run_out ? "loro" : "kfold";
}

CvScheme scheme_from_string(const std::string& text) {
  if (text == "loro" || text == "leave-one-run-out") return CvScheme::leave_one_run_out;
  if (text == "kfold" || text == "stratified") return CvScheme::stratified_kfold;
  throw ContractError("unknown cross-validation scheme '" + text + "'");
}

std::vector<std::size_t> assign_folds(const LabeledFeatures& data, const MvpaOptions& options,
                                      std::size_t* fold_count) {
  data.validate();
  std::vector<std::size_t> fold(data.rows(), 0);
  std::size_t count = 0;
  if (options.scheme == CvScheme::leave_one_run_out) {
    if (data.groups.empty()) throw ContractError("mvpa: leave-one-run-out needs run ids");
    const std::set<std::size_t> runs(data.groups.begin(), data.groups.end());
    if (runs.size() < 2) throw ContractError("mvpa: leave-one-run-out needs at least two runs");
    std::map<std::size_t, std::size_t> index;
    for (std::size_t r : runs) index.emplace(r, index.size());
    for (std::size_t i = 0; i < data.rows(); ++i) fold[i] = index.at(data.groups[i]);
    count = runs.size();
  } else {
    if (options.folds < 2) throw ContractError("mvpa: need at least two folds");
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.rows(); ++i) by_class[data.labels[i]].push_back(i);
    std::mt19937_64 engine(options.seed);
    for (auto& [label, rows] : by_class) {
      if (rows.size() < options.folds) {
        throw ContractError("mvpa: class " + std::to_string(label) + " has fewer rows than folds");
      }
      std::shuffle(rows.begin(), rows.end(), engine);
      for (std::size_t m = 0; m < rows.size(); ++m) fold[rows[m]] = m % options.folds;
    }
    count = options.folds;
  }
  if (fold_count) *fold_count = count;
  return fold;
}

MvpaResult mvpa_run(const LabeledFeatures& data, const MvpaOptions& options) {
  data.validate();
  const std::size_t classes = data.class_count();
  {
    const std::set<std::size_t> present(data.labels.begin(), data.labels.end());
    if (present.size() < 2) throw ContractError("mvpa: need at least two classes");
  }
  std::size_t fold_count = 0;
  const std::vector<std::size_t> fold = assign_folds(data, options, &fold_count);
  const std::size_t cols = data.features.cols();

  MvpaResult result;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> aucs;
    for (std::size_t f = 0; f < fold_count; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < data.rows(); ++i) (fold[i] == f ? test : train).push_back(i);
      auto has_both = [&](const std::vector<std::size_t>& rows) {
        bool pos = false, neg = false;
        for (std::size_t i : rows) (data.labels[i] == c ? pos : neg) = true;
        return pos && neg;
      };
      if (!has_both(train) || !has_both(test)) continue;

      std::vector<std::size_t> columns(cols);
      std::iota(columns.begin(), columns.end(), 0);
      FoldResult fr{c, f, 0.0, {}};
      if (options.select_features) {
        Tensor sub({train.size(), cols}, 0.0);
        std::vector<std::size_t> labels;
        for (std::size_t r = 0; r < train.size(); ++r) {
          for (std::size_t j = 0; j < cols; ++j) sub.at(r, j) = data.features.at(train[r], j);
          labels.push_back(data.labels[train[r]] == c ? 1 : 0);
        }
        columns = anova_f_select(sub, labels, options.select_count);
        fr.selected = columns;
      }
      auto gather = [&](const std::vector<std::size_t>& rows) {
        Tensor out({rows.size(), columns.size()}, 0.0);
        for (std::size_t r = 0; r < rows.size(); ++r) {
          for (std::size_t j = 0; j < columns.size(); ++j) {
            out.at(r, j) = data.features.at(rows[r], columns[j]);
          }
        }
        return out;
      };
      const Tensor x_train = gather(train);
      const Tensor x_test = gather(test);
      std::vector<int> y;
      for (std::size_t i : train) y.push_back(data.labels[i] == c ? 1 : -1);
      const LinearModel model = linear_svm_train(x_train, y, options.svm_c, options.svm_epochs,
                                                 options.seed + 7919 * (c * fold_count + f + 1));
      std::vector<double> scores;
      std::vector<bool> positive;
      for (std::size_t r = 0; r < test.size(); ++r) {
        scores.push_back(model.score(std::span<const double>(x_test.data() + r * columns.size(),
                                                             columns.size())));
        positive.push_back(data.labels[test[r]] == c);
      }
      fr.auc = auc(scores, positive);
      aucs.push_back(fr.auc);
      result.folds.push_back(std::move(fr));
    }
    if (aucs.empty()) continue;
    ClassSummary summary;
    summary.class_id = c;
    summary.name = c < data.class_names.size() ? data.class_names[c] : std::to_string(c);
    summary.folds = aucs.size();
    summary.mean_auc = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
    double ss = 0.0;
    for (double a : aucs) ss += (a - summary.mean_auc) * (a - summary.mean_auc);
    summary.sd_auc = aucs.size() > 1 ? std::sqrt(ss / static_cast<double>(aucs.size() - 1)) : 0.0;
    result.classes.push_back(summary);
  }
  return result;
}

std::string mvpa_results_csv(const MvpaResult& result, std::span<const std::string> names) {
  std::ostringstream out;
  out.precision(17);
  out << "class,fold,auc\n";
  for (const FoldResult& f : result.folds) {
    if (f.class_id < names.size()) out << names[f.class_id];
    else out << f.class_id;
    out << ',' << f.fold << ',' << f.auc << '\n';
  }
  return out.str();
}

Tensor fc_matrix(const Tensor& w) {
  if (w.rank() != 2) throw DimensionError("fc_matrix: expected a T x K matrix");
  const std::size_t t_count = w.rows();
  const std::size_t k_count = w.cols();
  if (t_count < 2) throw ContractError("fc_matrix: need at least two time points");
  std::vector<double> mean(k_count, 0.0);
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t k = 0; k < k_count; ++k) mean[k] += w.at(t, k);
  }
  for (double& m : mean) m /= static_cast<double>(t_count);
  Tensor cov({k_count, k_count}, 0.0);
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t a = 0; a < k_count; ++a) {
      for (std::size_t b = 0; b < k_count; ++b) {
        cov.at(a, b) += (w.at(t, a) - mean[a]) * (w.at(t, b) - mean[b]);
      }
    }
  }
  Tensor out({k_count, k_count}, 0.0);
  for (std::size_t a = 0; a < k_count; ++a) {
    for (std::size_t b = 0; b < k_count; ++b) {
      const double denom = std::sqrt(cov.at(a, a) * cov.at(b, b));
      out.at(a, b) = denom > 0.0 ? cov.at(a, b) / denom : 0.0;
    }
  }
  return out;
}

Tensor upper_triangle_features(std::span<const Tensor> matrices) {
  if (matrices.empty()) return Tensor({0, 0}, 0.0);
  const std::size_t k = matrices.front().rows();
  const std::size_t width = k * (k - 1) / 2;
  Tensor out({matrices.size(), width}, 0.0);
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const Tensor& m = matrices[i];
    if (m.rank() != 2 || m.rows() != k || m.cols() != k) {
      throw DimensionError("upper_triangle_features: matrices must all be K x K");
    }
    std::size_t col = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) out.at(i, col++) = m.at(a, b);
    }
  }
  return out;
}

MvpaResult fc_classify(std::span<const Tensor> fc_matrices, std::span<const std::size_t> labels,
                       std::span<const std::size_t> groups,
                       std::span<const std::string> class_names, const MvpaOptions& options) {
  LabeledFeatures data{upper_triangle_features(fc_matrices),
                       std::vector<std::size_t>(labels.begin(), labels.end()),
                       std::vector<std::size_t>(groups.begin(), groups.end()),
                       std::vector<std::string>(class_names.begin(), class_names.end())};
  return mvpa_run(data, options);
}

TaskLabels task_labels(const StudyDataset& dataset) {
  TaskLabels out;
  std::map<std::string, std::size_t> ids;
  for (std::size_t n = 0; n < dataset.trials.size(); ++n) {
    const Trial& t = dataset.trials[n];
    if (t.block != BlockType::task) continue;
    const std::string name = t.stimulus < dataset.stimulus_labels.size()
                                 ? dataset.stimulus_labels[t.stimulus]
                                 : "stimulus" + std::to_string(t.stimulus);
    auto [it, inserted] = ids.emplace(name, out.class_names.size());
    if (inserted) out.class_names.push_back(name);
    out.trials.push_back(n);
    out.labels.push_back(it->second);
    out.groups.push_back(t.run);
  }
  return out;
}

LabeledFeatures task_features(const StudyDataset& dataset, std::span<const Tensor> per_trial) {
  if (per_trial.size() != dataset.trials.size()) {
    throw DimensionError("task_features: one matrix per trial required");
  }
  TaskLabels labels = task_labels(dataset);
  std::vector<Tensor> chosen;
  for (std::size_t n : labels.trials) chosen.push_back(per_trial[n]);
  return LabeledFeatures{time_average_rows(chosen), std::move(labels.labels),
                         std::move(labels.groups), std::move(labels.class_names)};
}

Tensor time_average_rows(std::span<const Tensor> matrices) {
  if (matrices.empty()) return Tensor({0, 0}, 0.0);
  const std::size_t cols = matrices.front().cols();
  Tensor out({matrices.size(), cols}, 0.0);
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const Tensor& m = matrices[i];
    if (m.rank() != 2 || m.cols() != cols || m.rows() == 0) {
      throw DimensionError("time_average_rows: matrices must share a column count");
    }
    for (std::size_t t = 0; t < m.rows(); ++t) {
      for (std::size_t j = 0; j < cols; ++j) out.at(i, j) += m.at(t, j);
    }
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) /= static_cast<double>(m.rows());
  }
  return out;
}

}  // namespace ntfa::analysis
