#include "doctest.h"

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "nectar/classifier.hpp"
#include "nectar/rng.hpp"

using namespace nectar;

namespace {

Sample sample(double gcc, double acc, ObjectiveKind label, double weight = 1.0) {
  FeatureVector f;
  f.gcc = gcc;
  f.acc = acc;
  return {f, label, weight};
}

std::vector<Sample> separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform_real(), y = rng.uniform_real();
    if (std::abs(x + y - 1.0) < 0.1) continue;
    rows.push_back(sample(x, y, x + y > 1.0 ? ObjectiveKind::kWOCC : ObjectiveKind::kQE,
                          rng.uniform_real(0.05, 1.0)));
  }
  return rows;
}

Hyperparams small_params(LearnerKind learner = LearnerKind::kExtraTrees) {
  Hyperparams p;
  p.learner = learner;
  p.n_estimators = 100;
  p.max_depth = 10;
  return p;
}

}  // namespace

TEST_SUITE("classifier") {

TEST_CASE("hyperparameter validation") {
  CHECK_NOTHROW(validate_hyperparams(Hyperparams{}));
  Hyperparams p;
  p.n_estimators = 150;
  CHECK_THROWS_AS(validate_hyperparams(p), std::invalid_argument);
  p = {};
  p.max_depth = 6;
  CHECK_THROWS_AS(validate_hyperparams(p), std::invalid_argument);
  p = {};
  p.min_samples_leaf = 4;
  CHECK_THROWS_AS(validate_hyperparams(p), std::invalid_argument);
}

TEST_CASE("grid expansion and file") {
  HyperparamGrid g;
  g.max_depth = {5, 10};
  g.min_samples_leaf = {2, 3};
  const auto points = g.expand();
  REQUIRE(points.size() == 4);
  CHECK(std::is_sorted(points.begin(), points.end()));
  fixture::TempDir dir;
  fixture::write_file(dir / "grid.txt",
                      "# grid\nlearner extra_trees,random_forest\nmax_depth 3,40\n");
  const HyperparamGrid read = read_grid(dir / "grid.txt");
  CHECK(read.learners.size() == 2);
  CHECK(read.max_depth == std::vector<int>{3, 40});
  CHECK(read.n_estimators == std::vector<int>{300});
  fixture::write_file(dir / "bad.txt", "depth 3\n");
  CHECK_THROWS_AS(read_grid(dir / "bad.txt"), std::invalid_argument);
}

TEST_CASE("oversampling reaches parity") {
  std::vector<Sample> rows;
  for (int i = 0; i < 7; ++i) rows.push_back(sample(i, 0, ObjectiveKind::kQE));
  for (int i = 0; i < 3; ++i) rows.push_back(sample(i, 1, ObjectiveKind::kWOCC));
  const auto out = oversample(rows, 1);
  std::size_t wocc = 0;
  for (const auto& s : out) wocc += s.label == ObjectiveKind::kWOCC;
  CHECK(out.size() == 14);
  CHECK(wocc == 7);
  // One whole copy plus one drawn row: each minority row appears 2 or 3 times.
  for (int i = 0; i < 3; ++i) {
    std::size_t copies = 0;
    for (const auto& s : out) copies += s.label == ObjectiveKind::kWOCC && s.features.gcc == i;
    CHECK(copies >= 2);
    CHECK(copies <= 3);
  }
}

TEST_CASE("training errors and fallback") {
  const Hyperparams p = small_params();
  CHECK_THROWS_AS(train({}, MetricKind::kAverage, p, {}), std::invalid_argument);
  std::vector<Sample> one{sample(0, 0, ObjectiveKind::kQE), sample(1, 1, ObjectiveKind::kQE)};
  CHECK_THROWS_AS(train(one, MetricKind::kAverage, p, {}), std::invalid_argument);

  auto rows = separable(60, 3);
  for (auto& r : rows) r.weight = 0.0;
  std::string warning;
  const ModelEnsemble m = train(rows, MetricKind::kAverage, p, {}, &warning);
  CHECK_FALSE(warning.empty());
  CHECK(evaluate(m, rows, false).balanced_accuracy == 1.0);
}

TEST_CASE("separable data is fit exactly") {
  const auto rows = separable(200, 1);
  for (auto learner : {LearnerKind::kExtraTrees, LearnerKind::kRandomForest}) {
    const ModelEnsemble m = train(rows, MetricKind::kOmega, small_params(learner), {});
    CHECK_NOTHROW(m.validate());
    CHECK(m.trees.size() == 100);
    CHECK(evaluate(m, rows, false).balanced_accuracy == 1.0);
    CHECK(evaluate(m, rows, true).balanced_accuracy == 1.0);
  }
}

TEST_CASE("training is deterministic per seed") {
  const auto rows = separable(80, 2);
  TrainOptions a, b;
  a.seed = b.seed = 42;
  b.workers = 3;
  std::ostringstream sa, sb;
  write_model(sa, train(rows, MetricKind::kAverage, small_params(), a));
  write_model(sb, train(rows, MetricKind::kAverage, small_params(), b));
  CHECK(sa.str() == sb.str());
  TrainOptions c = a;
  c.seed = 43;
  std::ostringstream sc;
  write_model(sc, train(rows, MetricKind::kAverage, small_params(), c));
  CHECK(sa.str() != sc.str());
}

TEST_CASE("prediction rule") {
  ModelEnsemble m;
  DecisionTree t;
  t.nodes = {{0, 0.5, 1, 2, 0.0, 0.0}, {-1, 0.0, -1, -1, 1.0, 0.0}, {-1, 0.0, -1, -1, 0.0, 1.0}};
  m.trees.push_back(t);
  m.params.n_estimators = 1;
  FeatureVector f;
  f.gcc = 0.9;
  CHECK(predict(m, f).kind == ObjectiveKind::kWOCC);
  f.gcc = 0.2;
  CHECK(predict(m, f).kind == ObjectiveKind::kQE);

  DecisionTree half;
  half.nodes = {{-1, 0.0, -1, -1, 0.5, 0.5}};
  m.trees = {half};
  const Prediction p = predict(m, f);
  CHECK(p.p_wocc == 0.5);
  CHECK(p.kind == ObjectiveKind::kQE);
}

TEST_CASE("balanced accuracy") {
  SUBCASE("recalls 0.8 and 0.9") {
    std::vector<Sample> rows;
    std::vector<ObjectiveKind> pred;
    for (int i = 0; i < 10; ++i) {
      rows.push_back(sample(0, 0, ObjectiveKind::kWOCC));
      pred.push_back(i < 8 ? ObjectiveKind::kWOCC : ObjectiveKind::kQE);
      rows.push_back(sample(0, 0, ObjectiveKind::kQE));
      pred.push_back(i < 9 ? ObjectiveKind::kQE : ObjectiveKind::kWOCC);
    }
    const EvalReport r = evaluate_predictions(pred, rows, false);
    CHECK(r.recall_wocc.value() == doctest::Approx(0.8));
    CHECK(r.recall_qe.value() == doctest::Approx(0.9));
    CHECK(r.balanced_accuracy == doctest::Approx(0.85));
  }
  SUBCASE("single class omits the other recall") {
    std::vector<Sample> rows{sample(0, 0, ObjectiveKind::kQE), sample(0, 0, ObjectiveKind::kQE)};
    std::vector<ObjectiveKind> pred{ObjectiveKind::kQE, ObjectiveKind::kWOCC};
    const EvalReport r = evaluate_predictions(pred, rows, false);
    CHECK_FALSE(r.recall_wocc.has_value());
    CHECK(r.balanced_accuracy == doctest::Approx(0.5));
  }
  SUBCASE("weights change the score") {
    std::vector<Sample> rows{sample(0, 0, ObjectiveKind::kWOCC, 0.9),
                             sample(0, 0, ObjectiveKind::kWOCC, 0.05),
                             sample(0, 0, ObjectiveKind::kQE, 0.05)};
    std::vector<ObjectiveKind> pred{ObjectiveKind::kWOCC, ObjectiveKind::kQE, ObjectiveKind::kQE};
    const EvalReport plain = evaluate_predictions(pred, rows, false);
    const EvalReport weighted = evaluate_predictions(pred, rows, true);
    CHECK(plain.balanced_accuracy == doctest::Approx(0.75));
    CHECK(weighted.balanced_accuracy == doctest::Approx((0.9 / 0.95 + 1.0) / 2.0));
    CHECK(weighted.weighted);
  }
}

TEST_CASE("stratified folds") {
  std::vector<Sample> rows;
  for (int i = 0; i < 23; ++i) rows.push_back(sample(i, 0, ObjectiveKind::kQE));
  for (int i = 0; i < 12; ++i) rows.push_back(sample(i, 1, ObjectiveKind::kWOCC));
  const auto fold = stratified_folds(rows, 5, 7);
  for (auto label : {ObjectiveKind::kQE, ObjectiveKind::kWOCC}) {
    std::vector<int> count(5, 0);
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].label == label) ++count[fold[i]];
    CHECK(*std::max_element(count.begin(), count.end()) -
              *std::min_element(count.begin(), count.end()) <= 1);
  }
  CHECK(stratified_folds(rows, 5, 7) == fold);
}

TEST_CASE("cross-validation") {
  const auto rows = separable(80, 4);
  TrainOptions opt;
  opt.seed = 5;
  SUBCASE("single point") {
    HyperparamGrid g;
    g.n_estimators = {100};
    g.max_depth = {5};
    const auto r = cross_validate(rows, g, opt);
    CHECK(r.best.max_depth == 5);
    CHECK(r.fold_reports.size() == 5);
    CHECK(r.summary.fold_scores.size() == 5);
  }
  SUBCASE("ties go to the first point and reruns agree") {
    HyperparamGrid g;
    g.n_estimators = {100};
    g.max_depth = {10, 20};
    const auto a = cross_validate(rows, g, opt);
    const auto b = cross_validate(rows, g, opt);
    CHECK(a.best == b.best);
    CHECK(a.best_mean == b.best_mean);
    double top = -1;
    for (const auto& [p, s] : a.grid_scores) top = std::max(top, s);
    for (const auto& [p, s] : a.grid_scores) {
      if (s == top) {
        CHECK(p == a.best);
        break;
      }
    }
  }
  SUBCASE("a finer leaf size wins on banded labels") {
    std::vector<Sample> banded;
    for (int i = 0; i < 60; ++i)
      banded.push_back(sample(i, 0, (i / 6) % 2 ? ObjectiveKind::kWOCC : ObjectiveKind::kQE));
    HyperparamGrid g;
    g.n_estimators = {100};
    g.max_depth = {10};
    g.min_samples_leaf = {2, 10};
    const auto r = cross_validate(banded, g, opt);
    CHECK(r.best.min_samples_leaf == 2);
    CHECK(r.grid_scores[0].second > r.grid_scores[1].second);
  }
  SUBCASE("too little data") {
    HyperparamGrid g;
    std::vector<Sample> few(rows.begin(), rows.begin() + 8);
    CHECK_THROWS_AS(cross_validate(few, g, opt), std::invalid_argument);
  }
}

TEST_CASE("information gain") {
  SUBCASE("independent label") {
    Rng rng(10);
    std::vector<Sample> rows;
    for (int i = 0; i < 1000; ++i) {
      rows.push_back(sample(rng.uniform_real(), rng.uniform_real(),
                            rng.uniform(2) ? ObjectiveKind::kWOCC : ObjectiveKind::kQE));
    }
    const auto gains = information_gain(rows, 20);
    CHECK(gains[0].gain <= 0.02);
    CHECK(gains[1].gain <= 0.02);
  }
  SUBCASE("deterministic binary feature") {
    std::vector<Sample> rows;
    for (int i = 0; i < 30; ++i)
      rows.push_back(sample(i % 3 == 0 ? 1.0 : 0.0, 0.5,
                            i % 3 == 0 ? ObjectiveKind::kWOCC : ObjectiveKind::kQE));
    const auto gains = information_gain(rows, 10);
    CHECK(gains[0].feature == "gcc");
    CHECK(gains[0].gain == doctest::Approx(label_entropy(rows)).epsilon(1e-12));
    CHECK(gains[1].gain == 0.0);
    CHECK(gains[1].histogram.size() == 1);
  }
  SUBCASE("bad bins") {
    CHECK_THROWS_AS(information_gain(separable(10, 1), 1), std::invalid_argument);
  }
}

TEST_CASE("model files") {
  const auto rows = separable(100, 6);
  const ModelEnsemble m = train(rows, MetricKind::kONMI, small_params(LearnerKind::kRandomForest), {});
  std::ostringstream text;
  write_model(text, m);
  std::istringstream in("# comment\n" + text.str());
  const ModelEnsemble back = read_model(in);
  CHECK(back.metric == MetricKind::kONMI);
  CHECK(back.params == m.params);
  CHECK(back.train_fingerprint == m.train_fingerprint);
  std::ostringstream again;
  write_model(again, back);
  CHECK(again.str() == text.str());

  fixture::TempDir dir;
  save_model(dir / "m.txt", m, "# nectar-ml\n");
  const ModelEnsemble loaded = load_model(dir / "m.txt");
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    std::array<double, FeatureVector::kSize> x;
    for (auto& v : x) v = rng.uniform_real(-1, 2);
    const auto f = FeatureVector::from_array(x);
    CHECK(predict(loaded, f).p_wocc == predict(m, f).p_wocc);
  }

  std::string broken = text.str();
  broken.replace(broken.find("nectar-ml-model"), 6, "xxxxxx");
  std::istringstream bad(broken);
  CHECK_THROWS_AS(read_model(bad), ModelError);
  std::istringstream truncated(text.str().substr(0, text.str().size() / 2));
  CHECK_THROWS_AS(read_model(truncated), ModelError);
  CHECK_THROWS_AS(load_model(dir / "absent.txt"), IoError);
}

TEST_CASE("fingerprint ignores row order") {
  auto rows = separable(30, 9);
  const auto a = fingerprint(rows);
  std::reverse(rows.begin(), rows.end());
  CHECK(fingerprint(rows) == a);
  rows[0].weight += 0.5;
  CHECK(fingerprint(rows) != a);
}

}
