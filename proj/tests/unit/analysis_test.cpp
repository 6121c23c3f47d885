#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "ntfa/analysis/analysis.hpp"
#include "ntfa/error.hpp"
#include "ntfa/synth/synthetic.hpp"
#include "oracles.hpp"

using namespace ntfa;
using namespace ntfa::analysis;
using ntfa::testing::pairwise_auc;
using ntfa::testing::pearson;
using ntfa::testing::random_tensor;

namespace {

LabeledFeatures random_features(std::size_t rows, std::size_t cols, std::size_t classes, Rng& rng) {
  LabeledFeatures data;
  data.features = random_tensor({rows, cols}, rng);
  for (std::size_t i = 0; i < rows; ++i) {
    data.labels.push_back(i % classes);
    data.groups.push_back(i % 3);
  }
  for (std::size_t c = 0; c < classes; ++c) data.class_names.push_back("c" + std::to_string(c));
  return data;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("constant column has F of zero") {
  Tensor x = Tensor::matrix({{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}, {4.0, 5.0}});
  const std::vector<std::size_t> labels = {0, 0, 1, 1};
  const std::vector<double> f = anova_f(x, labels);
  CHECK(f[1] == 0.0);
  CHECK(f[0] > 0.0);
}

TEST_CASE("perfectly separated column has infinite F and ranks first") {
  Tensor x = Tensor::matrix({{0.3, 1.0, 0.1}, {0.9, 1.0, 0.5}, {0.2, 2.0, 0.7}, {0.1, 2.0, 0.6}});
  const std::vector<std::size_t> labels = {0, 0, 1, 1};
  const std::vector<double> f = anova_f(x, labels);
  CHECK(f[1] == std::numeric_limits<double>::infinity());
  const std::vector<std::size_t> top = anova_f_select(x, labels, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == 1);
  CHECK(anova_f_select(x, labels, 10).size() == 3);
}

TEST_CASE("F statistic of a textbook example") {
  // Groups {1,2,3}, {4,5,6}, {7,8,9}: between SS 54 on 2 df, within SS 6 on 6 df.
  Tensor x({9, 1});
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 9; ++i) {
    x.at(i, 0) = static_cast<double>(i + 1);
    labels.push_back(i / 3);
  }
  CHECK(anova_f(x, labels)[0] == doctest::Approx(27.0).epsilon(1e-12));
}

TEST_CASE("F statistic is invariant to affine rescaling") {
  Rng rng(1);
  LabeledFeatures data = random_features(24, 5, 3, rng);
  Tensor scaled = data.features;
  for (double& v : scaled.values()) v = -3.0 * v + 7.0;
  const std::vector<double> a = anova_f(data.features, data.labels);
  const std::vector<double> b = anova_f(scaled, data.labels);
  for (std::size_t j = 0; j < 5; ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-9));
}

TEST_CASE("F statistics and selection match the sums-of-squares oracle") {
  for (std::uint64_t instance = 0; instance < 100; ++instance) {
    Rng rng(500 + instance);
    LabeledFeatures data = random_features(12 + instance % 9, 30, 2 + instance % 3, rng);
    // Rounding creates ties in F.
    for (double& v : data.features.values()) v = std::round(v * 2.0) / 2.0;
    const std::vector<double> got = anova_f(data.features, data.labels);
    const std::vector<double> expected = ntfa::testing::anova_f_oracle(data.features, data.labels);
    for (std::size_t j = 0; j < got.size(); ++j) {
      if (std::isinf(expected[j])) {
        CHECK(got[j] == expected[j]);
      } else {
        CHECK(got[j] == doctest::Approx(expected[j]).epsilon(1e-9).scale(1.0));
      }
    }
    const std::size_t count = 1 + instance % 12;
    CHECK(anova_f_select(data.features, data.labels, count) ==
          ntfa::testing::anova_select_oracle(data.features, data.labels, count));
  }
}

TEST_CASE("linear classifier separates a separable set") {
  Rng rng(2);
  Tensor x({40, 3});
  std::vector<int> y;
  for (std::size_t i = 0; i < 40; ++i) {
    const int label = i % 2 == 0 ? 1 : -1;
    y.push_back(label);
    x.at(i, 0) = label * 2.0 + rng.normal(0.0, 0.3);
    x.at(i, 1) = rng.normal();
    x.at(i, 2) = rng.normal();
  }
  const LinearModel m = linear_svm_train(x, y, 1.0, 2000, 3);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    const double s = m.score(std::span<const double>(&x.at(i, 0), 3));
    if ((s > 0) == (y[i] > 0)) ++correct;
  }
  CHECK(correct == 40);
}

TEST_CASE("duplicating the training set keeps the separating direction") {
  Rng rng(3);
  Tensor x({30, 4});
  std::vector<int> y;
  for (std::size_t i = 0; i < 30; ++i) {
    const int label = i % 2 == 0 ? 1 : -1;
    y.push_back(label);
    for (std::size_t j = 0; j < 4; ++j) x.at(i, j) = rng.normal() + (j == 0 ? 1.5 * label : 0.0);
  }
  Tensor x2({60, 4});
  std::vector<int> y2 = y;
  y2.insert(y2.end(), y.begin(), y.end());
  for (std::size_t i = 0; i < 60; ++i) {
    for (std::size_t j = 0; j < 4; ++j) x2.at(i, j) = x.at(i % 30, j);
  }
  // Halving C on the doubled set leaves the objective unchanged.
  const LinearModel a = linear_svm_train(x, y, 1.0, 10000, 0);
  const LinearModel b = linear_svm_train(x2, y2, 0.5, 5000, 0);
  double dot = a.bias * b.bias, na = a.bias * a.bias, nb = b.bias * b.bias;
  for (std::size_t j = 0; j < 4; ++j) {
    dot += a.weights[j] * b.weights[j];
    na += a.weights[j] * a.weights[j];
    nb += b.weights[j] * b.weights[j];
  }
  CHECK(dot / std::sqrt(na * nb) >= 0.999);
}

TEST_CASE("identical rows give a constant score and chance AUC") {
  Tensor x({10, 3}, 0.7);
  std::vector<int> y;
  std::vector<bool> pos;
  for (std::size_t i = 0; i < 10; ++i) {
    y.push_back(i < 5 ? 1 : -1);
    pos.push_back(i < 5);
  }
  const LinearModel m = linear_svm_train(x, y, 1.0, 500, 1);
  std::vector<double> scores;
  for (std::size_t i = 0; i < 10; ++i) scores.push_back(m.score(std::span<const double>(&x.at(i, 0), 3)));
  for (double s : scores) CHECK(s == scores[0]);
  CHECK(auc(scores, pos) == 0.5);
}

TEST_CASE("AUC of ordered, inverted and tied scores") {
  const std::vector<bool> pos = {false, false, true, true, true};
  CHECK(auc(std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}, pos) == 1.0);
  CHECK(auc(std::vector<double>{0.5, 0.4, 0.3, 0.2, 0.1}, pos) == 0.0);
  CHECK(auc(std::vector<double>{1.0, 1.0, 1.0, 1.0, 1.0}, pos) == 0.5);
}

TEST_CASE("AUC matches the pairwise count") {
  for (std::uint64_t instance = 0; instance < 100; ++instance) {
    Rng rng(instance);
    const std::size_t n = 5 + instance % 20;
    std::vector<double> scores;
    std::vector<bool> pos;
    for (std::size_t i = 0; i < n; ++i) {
      // Rounding creates ties.
      scores.push_back(std::round(rng.normal() * 3.0) / 3.0);
      pos.push_back(i % 3 == 0);
    }
    CHECK(auc(scores, pos) == doctest::Approx(pairwise_auc(scores, pos)).epsilon(1e-12));
    std::vector<double> mapped;
    for (double s : scores) mapped.push_back(std::exp(2.0 * s) + 1.0);
    CHECK(auc(mapped, pos) == doctest::Approx(auc(scores, pos)).epsilon(1e-12));
  }
}

TEST_CASE("AUC needs both classes") {
  const std::vector<double> scores = {0.1, 0.2};
  CHECK_THROWS_AS(auc(scores, std::vector<bool>{true, true}), ContractError);
  CHECK_THROWS_AS(auc(scores, std::vector<bool>{false, false}), ContractError);
  CHECK_THROWS_AS(auc(scores, std::vector<bool>{true}), ContractError);
}

TEST_CASE("leave-one-run-out needs at least two runs") {
  Rng rng(4);
  LabeledFeatures data = random_features(12, 3, 2, rng);
  data.groups.assign(12, 0);
  MvpaOptions opts;
  opts.scheme = CvScheme::leave_one_run_out;
  CHECK_THROWS_AS(mvpa_run(data, opts), ContractError);
}

TEST_CASE("leave-one-run-out makes one fold per run") {
  Rng rng(5);
  LabeledFeatures data = random_features(12, 3, 2, rng);
  MvpaOptions opts;
  opts.scheme = CvScheme::leave_one_run_out;
  std::size_t folds = 0;
  const std::vector<std::size_t> assignment = assign_folds(data, opts, &folds);
  CHECK(folds == 3);
  for (std::size_t i = 0; i < 12; ++i) CHECK(assignment[i] == data.groups[i]);
}

TEST_CASE("stratified folds balance each class") {
  Rng rng(6);
  LabeledFeatures data = random_features(30, 3, 2, rng);
  MvpaOptions opts;
  std::size_t folds = 0;
  const std::vector<std::size_t> assignment = assign_folds(data, opts, &folds);
  REQUIRE(folds == 3);
  std::vector<std::vector<std::size_t>> counts(2, std::vector<std::size_t>(3, 0));
  for (std::size_t i = 0; i < 30; ++i) counts[data.labels[i]][assignment[i]] += 1;
  for (const auto& row : counts) {
    for (std::size_t c : row) CHECK(c == 5);
  }
}

TEST_CASE("feature selection runs inside each training fold") {
  Rng rng(7);
  LabeledFeatures data = random_features(30, 40, 2, rng);
  MvpaOptions opts;
  opts.select_features = true;
  opts.select_count = 5;
  opts.svm_epochs = 200;
  const MvpaResult result = mvpa_run(data, opts);
  REQUIRE(result.folds.size() >= 2);
  bool differ = false;
  for (const FoldResult& f : result.folds) {
    CHECK(f.selected.size() == 5);
    if (f.selected != result.folds.front().selected) differ = true;
  }
  CHECK(differ);
}

TEST_CASE("classifier finds a planted class signal") {
  Rng rng(8);
  LabeledFeatures data = random_features(60, 6, 3, rng);
  for (std::size_t i = 0; i < 60; ++i) data.features.at(i, data.labels[i]) += 3.0;
  MvpaOptions opts;
  opts.svm_epochs = 1000;
  const MvpaResult result = mvpa_run(data, opts);
  REQUIRE(result.classes.size() == 3);
  for (const ClassSummary& c : result.classes) {
    CHECK(c.mean_auc > 0.9);
    CHECK(c.folds == 3);
    CHECK(c.name == "c" + std::to_string(c.class_id));
  }
  const std::string csv = mvpa_results_csv(result, data.class_names);
  CHECK(csv.rfind("class,fold,auc\n", 0) == 0);
}

TEST_CASE("connectivity of duplicated and negated columns") {
  Rng rng(9);
  Tensor w = random_tensor({20, 3}, rng);
  for (std::size_t t = 0; t < 20; ++t) {
    w.at(t, 1) = 2.0 * w.at(t, 0) + 1.0;
    w.at(t, 2) = -w.at(t, 0);
  }
  const Tensor fc = fc_matrix(w);
  CHECK(fc.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fc.at(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("connectivity matches the Pearson oracle") {
  for (std::uint64_t instance = 0; instance < 100; ++instance) {
    Rng rng(300 + instance);
    const std::size_t k = 2 + instance % 4;
    const Tensor w = random_tensor({10 + instance % 7, k}, rng);
    const Tensor fc = fc_matrix(w);
    for (std::size_t a = 0; a < k; ++a) {
      CHECK(fc.at(a, a) == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t b = 0; b < k; ++b) {
        CHECK(fc.at(a, b) == fc.at(b, a));
        if (a != b) CHECK(fc.at(a, b) == doctest::Approx(pearson(w, a, b)).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("constant columns have zero connectivity") {
  Tensor w = Tensor::matrix({{1.0, 2.0}, {2.0, 2.0}, {4.0, 2.0}});
  const Tensor fc = fc_matrix(w);
  CHECK(fc.at(0, 1) == 0.0);
  CHECK(fc.at(1, 1) == 0.0);
  CHECK(fc.at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("two factors give one connectivity feature") {
  Rng rng(10);
  std::vector<Tensor> mats;
  for (int i = 0; i < 4; ++i) mats.push_back(fc_matrix(random_tensor({8, 2}, rng)));
  const Tensor features = upper_triangle_features(mats);
  CHECK(features.shape() == diff::Shape{4, 1});
  for (std::size_t i = 0; i < 4; ++i) CHECK(features.at(i, 0) == mats[i].at(0, 1));
  mats.clear();
  mats.push_back(fc_matrix(random_tensor({8, 4}, rng)));
  const Tensor f4 = upper_triangle_features(mats);
  CHECK(f4.shape() == diff::Shape{1, 6});
  CHECK(f4.at(0, 3) == mats[0].at(1, 2));
}

TEST_CASE("identical connectivity across classes gives chance AUC") {
  Rng rng(11);
  const Tensor fc = fc_matrix(random_tensor({12, 3}, rng));
  std::vector<Tensor> mats(18, fc);
  std::vector<std::size_t> labels, groups;
  for (std::size_t i = 0; i < 18; ++i) {
    labels.push_back(i % 2);
    groups.push_back(i % 3);
  }
  const std::vector<std::string> names = {"a", "b"};
  MvpaOptions opts;
  opts.svm_epochs = 200;
  const MvpaResult result = fc_classify(mats, labels, groups, names, opts);
  for (const ClassSummary& c : result.classes) CHECK(c.mean_auc == doctest::Approx(0.5));
}

TEST_CASE("task labels and features of the synthetic study") {
  synth::SynthDesign design = synth::SynthDesign::defaults();
  design.voxels = 27;
  design.time_points = 4;
  synth::SyntheticStudy study = synth::generate_synthetic(design);
  const TaskLabels tl = task_labels(study.dataset);
  CHECK(tl.trials.size() == 72);
  CHECK(tl.class_names == std::vector<std::string>{"Task1", "Task2"});
  for (std::size_t i = 0; i < tl.trials.size(); ++i) {
    const Trial& t = study.dataset.trials[tl.trials[i]];
    CHECK(t.block == BlockType::task);
    CHECK(tl.groups[i] == t.run);
    CHECK(tl.labels[i] == (t.stimulus < 4 ? 0u : 1u));
  }
  std::vector<Tensor> per_trial;
  for (const Trial& t : study.dataset.trials) per_trial.push_back(t.data);
  const LabeledFeatures lf = task_features(study.dataset, per_trial);
  CHECK(lf.features.shape() == diff::Shape{72, 27});
  const Tensor& y = study.dataset.trials[tl.trials[5]].data;
  double mean = 0.0;
  for (std::size_t t = 0; t < 4; ++t) mean += y.at(t, 3) / 4.0;
  CHECK(lf.features.at(5, 3) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("cross-validation scheme names") {
  CHECK(std::string(to_string(CvScheme::leave_one_run_out)) ==
        to_string(scheme_from_string(to_string(CvScheme::leave_one_run_out))));
  CHECK(scheme_from_string(to_string(CvScheme::stratified_kfold)) == CvScheme::stratified_kfold);
  CHECK_THROWS_AS(scheme_from_string("bogus"), ContractError);
}

}
