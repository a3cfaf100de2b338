#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sedg/metrics.hpp"
#include "support/oracles.hpp"

using namespace sedg;

TEST(RocAuc, MatchesPairwiseOracleWithTies) {
  Rng rng(5);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + uniform_index(rng, 150);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(uniform_index(rng, 7)) / 2.0;
      y[i] = uniform01(rng) < 0.4 ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(roc_auc(s, y).auc, oracle::pairwise_auc(s, y), 1e-9);
  }
}

TEST(RocAuc, KnownValues) {
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y).auc, 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y).auc, 0.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y).auc, 0.5);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y).auc, 0.75);
}

TEST(RocAuc, CurveEndsAtCorners) {
  const auto r = roc_auc(std::vector<double>{0.3, 0.6, 0.6, 0.1}, std::vector<int>{1, 0, 1, 0});
  ASSERT_FALSE(r.curve.points.empty());
  EXPECT_DOUBLE_EQ(r.curve.points.front().fpr, 0.0);
  EXPECT_DOUBLE_EQ(r.curve.points.front().tpr, 0.0);
  EXPECT_DOUBLE_EQ(r.curve.points.back().fpr, 1.0);
  EXPECT_DOUBLE_EQ(r.curve.points.back().tpr, 1.0);
}

TEST(RocAuc, SingleClassThrows) {
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), std::invalid_argument);
}

TEST(Multiclass, PerClassAndMacro) {
  Matrix s(4, 3);
  s << 0.8, 0.1, 0.1,
       0.2, 0.7, 0.1,
       0.3, 0.3, 0.4,
       0.1, 0.2, 0.7;
  const std::vector<int> y{0, 1, 2, 2};
  const auto r = multiclass_auc(s, y);
  for (int c = 0; c < 3; ++c) {
    std::vector<double> col(4);
    std::vector<int> bin(4);
    for (int i = 0; i < 4; ++i) {
      col[i] = s(i, c);
      bin[i] = y[i] == c;
    }
    EXPECT_NEAR(r.class_auc.at(c), oracle::pairwise_auc(col, bin), 1e-12);
  }
  EXPECT_NEAR(r.macro_auc, (r.class_auc.at(0) + r.class_auc.at(1) + r.class_auc.at(2)) / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
}

TEST(Multiclass, ExcludesAbsentAndRequestedClasses) {
  Matrix s(3, 4);
  s << 0.5, 0.2, 0.2, 0.1,
       0.1, 0.6, 0.2, 0.1,
       0.3, 0.3, 0.3, 0.1;
  const std::vector<int> y{0, 1, 2};
  const auto r = multiclass_auc(s, y, {2});
  EXPECT_EQ(r.class_auc.size(), 2u);
  EXPECT_FALSE(r.class_auc.count(2));
  EXPECT_FALSE(r.class_auc.count(3));
  EXPECT_NE(std::find(r.excluded_classes.begin(), r.excluded_classes.end(), 3), r.excluded_classes.end());
}

TEST(Accuracy, ArgmaxTiesGoLow) {
  Matrix s(2, 3);
  s << 0.4, 0.4, 0.2,
       0.1, 0.45, 0.45;
  EXPECT_EQ(argmax_rows(s), (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{0, 2}, argmax_rows(s)), 0.5);
}

TEST(Confusion, CountsAndRates) {
  const std::vector<int> t{0, 0, 1, 1, 1};
  const std::vector<int> p{0, 1, 1, 1, 0};
  const auto cm = confusion(t, p);
  const auto b = cm.per_class.at(1);
  EXPECT_EQ(b.tp, 2u);
  EXPECT_EQ(b.fp, 1u);
  EXPECT_EQ(b.fn, 1u);
  EXPECT_EQ(b.tn, 1u);
  const auto r = tpr_fpr(b);
  EXPECT_DOUBLE_EQ(r.tpr, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.fpr, 0.5);
}

TEST(PercentImprovement, IsDifference) {
  EXPECT_DOUBLE_EQ(percent_improvement(0.75, 0.5), 0.25);
  EXPECT_DOUBLE_EQ(percent_improvement(0.5, 0.5), 0.0);
}

TEST(MetricReport, JsonRoundTrip) {
  MetricReport r;
  r.accuracy = 0.3;
  r.macro_auc = 0.7;
  r.micro_auc = 0.8;
  r.class_auc = {{2, 0.6}, {11, 0.9}};
  r.excluded_classes = {4};
  const auto back = metric_report_from_json(to_json(r));
  EXPECT_EQ(back.class_auc, r.class_auc);
  EXPECT_EQ(back.excluded_classes, r.excluded_classes);
  EXPECT_DOUBLE_EQ(back.macro_auc, 0.7);
}
