#include <gtest/gtest.h>

#include <numeric>

#include "sedg/classifiers.hpp"
#include "sedg/config.hpp"
#include "sedg/selection.hpp"
#include "support/oracles.hpp"

using namespace sedg;

TEST(CountRange, FixedAndRange) {
  Rng rng(1);
  EXPECT_EQ(CountRange::fixed(4).draw(rng), 4u);
  for (int i = 0; i < 100; ++i) {
    const auto v = CountRange{2, 5}.draw(rng);
    EXPECT_GE(v, 2u);
    EXPECT_LE(v, 5u);
  }
  EXPECT_EQ(count_range_from_json(nlohmann::json::parse("[1, 3]")).max, 3u);
  EXPECT_EQ(count_range_from_json(nlohmann::json(7)).min, 7u);
  EXPECT_THROW(count_range_from_json(nlohmann::json::parse("[3, 1]")), ConfigError);
}

TEST(Rss, DistinctWithoutReplacement) {
  const auto p = rss(50, 50, 3);
  std::set<std::size_t> s(p.indices.begin(), p.indices.end());
  EXPECT_EQ(s.size(), 50u);
  EXPECT_EQ(rss(10, 30, 3, false).indices.size(), 30u);
}

TEST(Rss, UniformFirstDraw) {
  std::vector<double> counts(8, 0.0);
  for (std::uint64_t s = 0; s < 8000; ++s) counts[rss(8, 3, s).indices[0]] += 1.0;
  EXPECT_GT(oracle::chi_square(counts, std::vector<double>(8, 1.0)).p_value, 0.01);
}

TEST(Pass, MemberProbabilities) {
  const Dataset d = oracle::toy_dataset({1, 2, 3});
  const auto prop = pass_member_probabilities(d, CardinalityDirection::proportional);
  EXPECT_NEAR(prop.at(0), 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(prop.at(2), 3.0 / 6.0, 1e-12);
  const auto inv = pass_member_probabilities(d, CardinalityDirection::inverse);
  EXPECT_NEAR(inv.at(0), 1.0 / (11.0 / 6.0), 1e-12);
  EXPECT_NEAR(inv.at(1), 0.5 / (11.0 / 6.0), 1e-12);
}

TEST(Pass, DeterministicMaxTakesLargestMembers) {
  const Dataset d = oracle::toy_dataset({2, 5, 3});
  SelectionPolicy p;
  p.kind = SelectionKind::pass;
  p.member_mode = MemberMode::deterministic_max;
  p.member_replacement = false;
  p.m = CountRange::fixed(10);
  p.k = CountRange::fixed(8);
  const auto pool = pass_select(d, p, 1);
  EXPECT_EQ(pool.member_draws, (std::vector<int>{1, 2}));
  EXPECT_EQ(pool.indices.size(), 8u);
}

TEST(Pass, ShortPoolIsFlagged) {
  set_warnings_enabled(false);
  const Dataset d = oracle::toy_dataset({2, 2});
  SelectionPolicy p;
  p.kind = SelectionKind::pass;
  p.member_replacement = false;
  p.k = CountRange::fixed(10);
  p.m = CountRange::fixed(1);
  const auto pool = pass_select(d, p, 1);
  EXPECT_TRUE(pool.short_pool);
  EXPECT_EQ(pool.indices.size(), 2u);
  set_warnings_enabled(true);
}

TEST(Pess, ProbabilitiesFollowLosses) {
  const std::vector<double> l{1, 3, 0, 4};
  const auto p = pess_probabilities(l);
  EXPECT_NEAR(p[0], 0.125, 1e-12);
  EXPECT_NEAR(p[3], 0.5, 1e-12);
  EXPECT_EQ(p[2], 0.0);
  const auto u = pess_probabilities({0, 0, 0});
  for (double v : u) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
}

TEST(Pess, OrderingLaw) {
  Rng rng(7);
  for (int inst = 0; inst < 200; ++inst) {
    std::vector<double> l(2 + uniform_index(rng, 20));
    for (auto& v : l) v = static_cast<double>(uniform_index(rng, 5)) * uniform01(rng);
    const auto p = pess_probabilities(l);
    for (std::size_t i = 0; i < l.size(); ++i)
      for (std::size_t j = 0; j < l.size(); ++j) EXPECT_EQ(p[i] > p[j], l[i] > l[j]);
  }
}

TEST(Pess, SelectIsDistinctAndLossFollowing) {
  const std::vector<double> l{0.5, 2.0, 0.0, 1.5};
  const auto pool = pess_select(l, 3, 4);
  std::set<std::size_t> s(pool.indices.begin(), pool.indices.end());
  EXPECT_EQ(s.size(), 3u);
  EXPECT_FALSE(s.count(2));
  std::vector<double> first(4, 0.0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) first[pess_select(l, 1, seed).indices[0]] += 1.0;
  EXPECT_GT(oracle::chi_square(first, l).p_value, 0.01);
}

TEST(Ppss, MemberProbabilities) {
  const auto q = ppss_member_probabilities({{0, 0.9}, {1, 0.6}}, {0, 1, 2});
  const double z = 0.1 + 0.4 + 0.5;
  EXPECT_NEAR(q.at(0), 0.1 / z, 1e-12);
  EXPECT_NEAR(q.at(1), 0.4 / z, 1e-12);
  EXPECT_NEAR(q.at(2), 0.5 / z, 1e-12);
  const auto u = ppss_member_probabilities({{0, 1.0}, {1, 1.0}}, {0, 1});
  EXPECT_NEAR(u.at(0), 0.5, 1e-12);
}

TEST(Ppss, SelectionFollowsOneMinusAuc) {
  const Dataset d = oracle::toy_dataset({5, 10, 20});
  const std::map<int, double> auc{{0, 0.6}, {1, 0.9}, {2, 0.8}};
  std::vector<double> counts(3, 0.0);
  for (std::uint64_t s = 0; s < 10000; ++s) counts[d[ppss_select(d, auc, 1, s).indices[0]].target] += 1.0;
  EXPECT_GT(oracle::chi_square(counts, {0.4, 0.1, 0.2}).p_value, 0.01);
}

TEST(Ppss, ProbeReturnsAucPerHeldOutClass) {
  const Dataset d = oracle::toy_dataset({20, 20, 20});
  auto proto = make_classifier("decision_tree", nlohmann::json::object(), 1);
  const auto auc = probe_class_auc(d, *proto, 0.3, 2);
  EXPECT_EQ(auc.size(), 3u);
  for (const auto& [c, v] : auc) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Weighting, TwoMeansAndImbalance) {
  const auto [a, b] = two_means_1d({10, 10, 100});
  EXPECT_DOUBLE_EQ(a, 10.0);
  EXPECT_DOUBLE_EQ(b, 100.0);
  EXPECT_NEAR(imbalance_ratio({10, 10, 100}), 0.9, 1e-12);
  EXPECT_DOUBLE_EQ(imbalance_ratio({25, 25, 25, 25}), 0.0);
  EXPECT_DOUBLE_EQ(imbalance_ratio({5}), 0.0);
}

TEST(Weighting, NormalisesAndFallsBack) {
  const Schema s = oracle::toy_schema();
  const auto w = make_weighting(WeightingKind::permutation_importance, s, {0.2, -0.1, 0.6, 0.0, 0.2});
  EXPECT_NEAR(std::accumulate(w.weights.begin(), w.weights.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(w.weights[1], 0.0);
  EXPECT_NEAR(w.weights[2], 0.6, 1e-12);
  const auto z = make_weighting(WeightingKind::permutation_importance, s, {-1, 0, 0, -2, 0});
  EXPECT_TRUE(z.uniform_fallback);
  for (double v : z.weights) EXPECT_NEAR(v, 0.2, 1e-12);
  const auto im = imbalance_weights(oracle::toy_dataset({10, 10, 10}));
  EXPECT_NEAR(std::accumulate(im.weights.begin(), im.weights.end(), 0.0), 1.0, 1e-9);
}

TEST(Weighting, ImportanceKinds) {
  const Dataset d = oracle::toy_dataset({30, 30, 30});
  auto tree = make_classifier("decision_tree", nlohmann::json::object(), 1);
  tree->fit(d);
  const auto g = gini_importance(*tree, d.schema());
  EXPECT_NEAR(std::accumulate(g.weights.begin(), g.weights.end(), 0.0), 1.0, 1e-9);
  EXPECT_GT(g.weights[0] + g.weights[3], 0.5);
  const auto p = permutation_importance(*tree, d, 3, 2);
  EXPECT_GT(p.weights[0] + p.weights[3], 0.5);
  const auto dc = drop_column_importance(*make_classifier("decision_tree", nlohmann::json::object(), 1), d, d);
  EXPECT_NEAR(std::accumulate(dc.weights.begin(), dc.weights.end(), 0.0), 1.0, 1e-9);
  auto svm = make_classifier("svm_ovr", nlohmann::json::object(), 1);
  svm->fit(d);
  EXPECT_THROW(gini_importance(*svm, d.schema()), UnsupportedError);
}

TEST(Weighting, NeutralizeSetsConstantColumn) {
  const Dataset d = oracle::toy_dataset({5, 5});
  const Dataset n = neutralize_feature(d, 3);
  for (const auto& s : n.samples()) EXPECT_EQ(s.features[3], 0.0);
}

TEST(FeatureSelection, DistinctAndWeighted) {
  Rng rng(1);
  const std::vector<double> w{0.5, 0.0, 0.3, 0.2};
  for (int i = 0; i < 200; ++i) {
    const auto f = select_features(w, 3, rng);
    std::set<std::size_t> s(f.begin(), f.end());
    EXPECT_EQ(s.size(), 3u);
    EXPECT_NE(f[0], 1u);
  }
  std::vector<double> first(4, 0.0);
  for (int i = 0; i < 10000; ++i) first[select_features(w, 1, rng)[0]] += 1.0;
  EXPECT_GT(oracle::chi_square(first, w).p_value, 0.01);
  EXPECT_EQ(select_features(w, 4, rng).size(), 4u);
}

TEST(SelectionPolicy, JsonParsing) {
  const auto p = selection_policy_from_json(nlohmann::json::parse(R"({"kind": "pass", "direction": "inverse", "k": [5, 9]})"));
  EXPECT_EQ(p.kind, SelectionKind::pass);
  EXPECT_EQ(p.direction, CardinalityDirection::inverse);
  EXPECT_EQ(p.k.max, 9u);
  EXPECT_THROW(selection_policy_from_json(nlohmann::json::parse(R"({"kind": "pass", "bogus": 1})")), ConfigError);
  EXPECT_THROW(selection_policy_from_json(nlohmann::json::parse(R"({"kind": "nope"})")), ConfigError);
}
