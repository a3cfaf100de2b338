#include <gtest/gtest.h>

#include <cmath>

#include "sedg/classifiers.hpp"
#include "support/oracles.hpp"

using namespace sedg;

namespace {

double train_accuracy(const Classifier& c, const Dataset& d) {
  const auto pred = c.predict(d);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) ok += pred[i] == d[i].target;
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

}  // namespace

TEST(DecisionTree, SplitsMidwayAndLeftIsLessEqual) {
  Matrix x(4, 1);
  x << 1, 2, 4, 5;
  DecisionTree t;
  t.fit(x, {0, 0, 1, 1}, 2);
  ASSERT_FALSE(t.nodes()[0].is_leaf());
  EXPECT_DOUBLE_EQ(t.nodes()[0].threshold, 3.0);
  RowVector r(1);
  r << 3.0;
  EXPECT_EQ(t.scores(r)(0, 0), 1.0);
}

TEST(DecisionTree, GiniDecreaseMatchesHandComputation) {
  Matrix x(6, 2);
  x << 0, 0, 0, 1, 0, 0, 1, 1, 1, 0, 1, 1;
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  DecisionTree t({1, 1, 2, 0, 0});
  t.fit(x, y, 2);
  const auto imp = t.impurity_importance(2);
  // Root gini 1/2, pure children, weighted by the 6 rows at the node.
  EXPECT_NEAR(imp[0], 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(imp[1], 0.0);
}

TEST(DecisionTree, TieGoesToLowestColumn) {
  Matrix x(4, 2);
  x << 0, 0, 0, 0, 1, 1, 1, 1;
  DecisionTree t;
  t.fit(x, {0, 0, 1, 1}, 2);
  EXPECT_EQ(t.nodes()[0].feature, 0);
}

TEST(DecisionTree, RegressionLeavesAreMeans) {
  Matrix x(4, 1);
  x << 0, 1, 2, 3;
  Vector target(4);
  target << 1, 1, 5, 7;
  DecisionTree t({1, 1, 2, 0, 0});
  t.fit_regression(x, target, {0, 1, 2, 3});
  RowVector r(1);
  r << 0.0;
  EXPECT_DOUBLE_EQ(t.predict_value(r), 1.0);
  r << 3.0;
  EXPECT_DOUBLE_EQ(t.predict_value(r), 6.0);
}

TEST(DecisionTree, JsonRoundTrip) {
  const Dataset d = oracle::toy_dataset({20, 20, 20});
  const Matrix x = Encoder(d.schema()).encode(d);
  DecisionTree t({4});
  t.fit(x, d.targets(), 3);
  EXPECT_EQ(DecisionTree::from_json(t.to_json()).scores(x), t.scores(x));
}

TEST(RandomForest, DeterministicAndAccurate) {
  const Dataset d = oracle::toy_dataset({30, 30, 30});
  auto a = make_classifier("random_forest", nlohmann::json{{"n_trees", 20}}, 5);
  auto b = make_classifier("random_forest", nlohmann::json{{"n_trees", 20}}, 5);
  a->fit(d);
  b->fit(d);
  EXPECT_EQ(a->predict_scores(d), b->predict_scores(d));
  EXPECT_GT(train_accuracy(*a, d), 0.8);
  const Matrix s = a->predict_scores(d);
  for (Eigen::Index r = 0; r < s.rows(); ++r) EXPECT_NEAR(s.row(r).sum(), 1.0, 1e-9);
  EXPECT_EQ(classifier_from_json(a->to_json())->predict_scores(d), s);
}

TEST(GradientBoosting, FirstRoundMatchesNewtonStep) {
  Matrix x(4, 1);
  x << 0, 0, 1, 1;
  const std::vector<int> y{0, 0, 1, 1};
  GradientBoosting g({1, 1.0, 1, 1, 0});
  g.fit(x, y, 2);
  // From F = 0: p = 1/2, residuals +-1/2, leaf = (K-1)/K * sum r / sum |r|(1-|r|) = 1/2 * 1 / 0.5.
  const Matrix raw = g.staged_raw(x, 1);
  EXPECT_NEAR(raw(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(raw(0, 1), -1.0, 1e-12);
  EXPECT_NEAR(raw(3, 1), 1.0, 1e-12);
  EXPECT_EQ(g.staged_raw(x, 0), Matrix::Zero(4, 2));
}

TEST(GradientBoosting, LossDecreasesWithRounds) {
  const Dataset d = oracle::toy_dataset({20, 20, 20});
  auto c = make_classifier("gradient_boosting", nlohmann::json{{"n_rounds", 15}}, 1);
  c->fit(d);
  EXPECT_GT(train_accuracy(*c, d), 0.8);
  EXPECT_EQ(classifier_from_json(c->to_json())->predict_scores(d), c->predict_scores(d));
}

TEST(LinearSvm, SeparatesLinearData) {
  Rng rng(1);
  Matrix x(80, 2);
  std::vector<int> y(80);
  for (Eigen::Index i = 0; i < 80; ++i) {
    y[i] = i < 40 ? 0 : 1;
    x(i, 0) = (y[i] ? 2.0 : -2.0) + 0.3 * standard_normal(rng);
    x(i, 1) = standard_normal(rng);
  }
  for (auto mode : {SvmMode::ovr, SvmMode::ovo}) {
    LinearSvm svm({mode, 1.0, 30, 2});
    svm.fit(x, y, 2);
    const Matrix s = svm.scores(x);
    std::size_t ok = 0;
    for (Eigen::Index i = 0; i < 80; ++i) ok += (s(i, 1) > s(i, 0)) == (y[i] == 1);
    EXPECT_GE(ok, 78u);
  }
}

TEST(LinearSvm, MachineCountsAndDegenerate) {
  const Dataset d = oracle::toy_dataset({10, 10, 10, 10});
  const Matrix x = Encoder(d.schema()).one_hot(d);
  LinearSvm ovr({SvmMode::ovr});
  ovr.fit(x, d.targets(), 4);
  EXPECT_EQ(ovr.machine_count(), 4u);
  LinearSvm ovo({SvmMode::ovo});
  ovo.fit(x, d.targets(), 4);
  EXPECT_EQ(ovo.machine_count(), 6u);
  const Matrix s = ovo.scores(x);
  for (Eigen::Index r = 0; r < s.rows(); ++r) EXPECT_NEAR(s.row(r).sum(), 1.0, 1e-9);
  LinearSvm one;
  one.fit(x.topRows(3), {2, 2, 2}, 4);
  EXPECT_TRUE(one.degenerate());
  EXPECT_EQ(one.scores(x).row(0).maxCoeff(), one.scores(x)(0, 2));
  LinearSvm back = LinearSvm::from_json(ovo.to_json());
  EXPECT_EQ(back.scores(x), s);
}

TEST(Classifier, PredictTiesGoLow) {
  const Dataset d = oracle::toy_dataset({5, 5});
  DecisionTree stump({1, 100});
  auto c = FeaturizedClassifier(std::make_unique<DecisionTree>(stump), Featurizer::encoded);
  c.fit(d);
  for (int p : c.predict(d)) EXPECT_EQ(p, 0);
}

TEST(NnClassifier, WarmStartKeepsWeights) {
  const Dataset d = oracle::toy_dataset({15, 15, 15});
  auto c = make_classifier("nn", nlohmann::json::parse(R"({"model": {"blocks": [{"width": 16, "dropout": 0.0}], "output_classes": 3},
                                                            "train": {"max_epochs": 3}})"), 1);
  EXPECT_TRUE(c->supports_warm_start());
  c->fit(d);
  const Matrix before = c->predict_scores(d);
  auto warm = c->clone();
  warm->fit_more(d);
  EXPECT_NE(warm->predict_scores(d), before);
  EXPECT_EQ(c->predict_scores(d), before);
  EXPECT_EQ(classifier_from_json(c->to_json())->predict_scores(d), before);
}

TEST(Classifier, RegistryAndConfigErrors) {
  for (const auto& n : classifier_names()) EXPECT_NO_THROW(make_classifier(n, nlohmann::json::object(), 1));
  EXPECT_THROW(make_classifier("knn", nlohmann::json::object(), 1), ConfigError);
  EXPECT_THROW(make_classifier("decision_tree", nlohmann::json{{"depth", 3}}, 1), ConfigError);
  EXPECT_THROW(make_classifier("svm_ovr", nlohmann::json{{"c", -1.0}}, 1), ConfigError);
}

TEST(Classifier, PerSampleLossIsCrossEntropy) {
  const Dataset d = oracle::toy_dataset({10, 10, 10});
  auto c = make_classifier("random_forest", nlohmann::json{{"n_trees", 5}}, 1);
  c->fit(d);
  const auto l = per_sample_loss(*c, d);
  const Matrix s = c->predict_scores(d);
  for (std::size_t i = 0; i < d.size(); ++i)
    EXPECT_NEAR(l[i], -std::log(std::max(s(static_cast<Eigen::Index>(i), d[i].target), 1e-12)), 1e-6);
}

TEST(Classifier, EmbedPreprocessUsesEmbedderOutputs) {
  const Dataset d = oracle::toy_dataset({10, 10, 10});
  auto emb = std::make_shared<const Embedder>(Embedder::identity(d.schema()));
  auto proto = make_classifier("decision_tree", nlohmann::json::object(), 1);
  auto wrapped = embed_preprocess(*proto, emb);
  wrapped->fit(d);
  proto->fit(d);
  EXPECT_EQ(wrapped->predict_scores(d), proto->predict_scores(d));
  auto nn = make_classifier("nn", nlohmann::json::object(), 1);
  EXPECT_THROW(embed_preprocess(*nn, emb), UnsupportedError);
}
