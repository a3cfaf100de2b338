#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "sedg/baselines.hpp"
#include "support/oracles.hpp"

using namespace sedg;

namespace {

// Brute-force k nearest same-class rows with a stable (distance, index) order.
std::vector<std::size_t> knn_oracle(const Matrix& x, std::size_t i, const std::vector<std::size_t>& pool,
                                    std::size_t k) {
  std::vector<std::size_t> c;
  for (auto j : pool)
    if (j != i) c.push_back(j);
  std::stable_sort(c.begin(), c.end(), [&](std::size_t a, std::size_t b) {
    const double da = (x.row(static_cast<Eigen::Index>(a)) - x.row(static_cast<Eigen::Index>(i))).squaredNorm();
    const double db = (x.row(static_cast<Eigen::Index>(b)) - x.row(static_cast<Eigen::Index>(i))).squaredNorm();
    return da < db || (da == db && a < b);
  });
  c.resize(std::min(k, c.size()));
  return c;
}

Dataset two_clusters() {
  Schema s;
  s.features.push_back(FeatureSpec::continuous("a", 0, 100, 1));
  s.features.push_back(FeatureSpec::continuous("b", 0, 100, 1));
  s.target = TargetSpec{"t", 0, 1};
  std::vector<Sample> rows;
  for (int i = 0; i < 6; ++i) rows.push_back({{static_cast<double>(i), 0}, 0});
  for (int i = 0; i < 3; ++i) rows.push_back({{static_cast<double>(90 + i), 100}, 1});
  return Dataset(s, rows);
}

}  // namespace

TEST(Median, CeilForEvenCounts) {
  EXPECT_EQ(median_class_size({{0, 3}, {1, 10}, {2, 5}}), 5u);
  EXPECT_EQ(median_class_size({{0, 3}, {1, 10}, {2, 6}, {3, 1}}), 5u);
  EXPECT_EQ(median_class_size({{0, 3}, {1, 4}}), 4u);
  EXPECT_EQ(median_class_size({}), 0u);
}

TEST(RandomOver, BalancesToLargestClass) {
  const Dataset d = oracle::toy_dataset({5, 12, 2});
  const Dataset r = resample(d, {ResampleKind::random_over}, 1);
  for (const auto& [c, n] : class_distribution(r)) EXPECT_EQ(n, 12u);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_FALSE(r[i].synthetic);
  for (std::size_t i = d.size(); i < r.size(); ++i) {
    EXPECT_TRUE(r[i].synthetic);
    bool copy = false;
    for (const auto& s : d.samples()) copy |= s.features == r[i].features && s.target == r[i].target;
    EXPECT_TRUE(copy);
  }
}

TEST(RandomUnder, ClassesAboveMedianShrinkToIt) {
  const Dataset d = oracle::toy_dataset({5, 12, 2, 9});
  ResampleTrace trace;
  const Dataset r = resample(d, {ResampleKind::random_under_majority}, 1, &trace);
  const auto dist = class_distribution(r);
  EXPECT_EQ(dist.at(0), 5u);
  EXPECT_EQ(dist.at(1), 7u);
  EXPECT_EQ(dist.at(2), 2u);
  EXPECT_EQ(dist.at(3), 7u);
  EXPECT_EQ(trace.removed.size(), 7u);
}

TEST(Smote, DrawsFollowNeighbourOracleAndLieOnSegments) {
  const Dataset d = oracle::toy_dataset({7, 25, 4, 12});
  ResampleTrace trace;
  const ResampleMethod m{ResampleKind::smote, 3, 3};
  const Dataset r = resample(d, m, 5, &trace);
  const Matrix x = Encoder(d.schema()).encode(d);
  for (const auto& [c, n] : class_distribution(r)) EXPECT_EQ(n, 25u);
  ASSERT_EQ(trace.smote.size(), r.size() - d.size());
  for (std::size_t t = 0; t < trace.smote.size(); ++t) {
    const auto& dr = trace.smote[t];
    const int c = d[dr.source].target;
    EXPECT_EQ(d[dr.neighbor].target, c);
    const auto nn = knn_oracle(x, dr.source, d.class_index().at(c), 3);
    EXPECT_NE(std::find(nn.begin(), nn.end(), dr.neighbor), nn.end());
    EXPECT_GE(dr.u, 0.0);
    EXPECT_LT(dr.u, 1.0);
    const RowVector a = x.row(static_cast<Eigen::Index>(dr.source));
    const RowVector b = x.row(static_cast<Eigen::Index>(dr.neighbor));
    EXPECT_LT((dr.point - (a + dr.u * (b - a))).cwiseAbs().maxCoeff(), 1e-12);
    const Sample& out = r[d.size() + t];
    EXPECT_EQ(out.target, c);
    EXPECT_EQ(Dataset::check_sample(d.schema(), out), "");
    EXPECT_EQ(out.features, Encoder(d.schema()).decode_row(dr.point, c).features);
  }
}

TEST(NearestRows, TiesGoLow) {
  Matrix x(4, 1);
  x << 0, 1, -1, 1;
  EXPECT_EQ(nearest_rows(x, 0, {0, 1, 2, 3}, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(nearest_rows(x, 0, {3, 2}, 5), (std::vector<std::size_t>{2, 3}));
}

TEST(Tomek, NoLinksBetweenSeparatedClusters) {
  const Dataset d = two_clusters();
  EXPECT_TRUE(tomek_links(d).empty());
  const Dataset r = resample(d, {ResampleKind::tomek}, 1);
  EXPECT_EQ(format_csv(r), format_csv(d));
}

TEST(Tomek, RemovesMajorityMemberOfLink) {
  Dataset base = two_clusters();
  std::vector<Sample> rows = base.samples();
  rows.push_back({{7, 0}, 1});
  rows.push_back({{20, 0}, 1});
  rows.push_back({{21, 0}, 0});
  const Dataset d = base.with_samples(rows);
  const auto links = tomek_links(d);
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0], (std::pair<std::size_t, std::size_t>{10, 11}));
  ResampleTrace trace;
  resample(d, {ResampleKind::tomek}, 1, &trace);
  EXPECT_EQ(trace.removed, (std::vector<std::size_t>{11}));
}

TEST(Tomek, EqualClassSizesRemoveBoth) {
  Schema s;
  s.features.push_back(FeatureSpec::continuous("a", 0, 100, 1));
  s.target = TargetSpec{"t", 0, 1};
  const Dataset d(s, {{{0}, 0}, {{1}, 1}, {{40}, 0}, {{99}, 1}});
  ResampleTrace trace;
  const Dataset r = resample(d, {ResampleKind::tomek}, 1, &trace);
  EXPECT_EQ(trace.removed, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.size(), 2u);
}

TEST(Enn, RemovesDisagreeingMajorityRowsOnly) {
  Schema s;
  s.features.push_back(FeatureSpec::continuous("a", 0, 100, 0.5));
  s.target = TargetSpec{"t", 0, 2};
  std::vector<Sample> rows;
  for (int i = 0; i < 8; ++i) rows.push_back({{static_cast<double>(i)}, 0});
  rows.push_back({{60}, 0});  // isolated inside class 1
  for (int i = 0; i < 4; ++i) rows.push_back({{static_cast<double>(50 + 2 * i)}, 1});
  rows.push_back({{3.5}, 2});  // minority row inside class 0
  rows.push_back({{90}, 2});
  const Dataset d(s, rows);
  ResampleTrace trace;
  resample(d, {ResampleKind::enn, 5, 3}, 1, &trace);
  EXPECT_EQ(trace.removed, (std::vector<std::size_t>{8}));
}

TEST(Combos, SmoteThenCleanKeepsSyntheticValid) {
  const Dataset d = oracle::toy_dataset({7, 25, 4, 12});
  for (auto k : {ResampleKind::smote_tomek, ResampleKind::smote_enn}) {
    const Dataset r = resample(d, {k, 3, 3}, 2);
    EXPECT_LE(r.size(), 100u);
    EXPECT_GT(r.size(), d.size());
    for (const auto& s : r.samples()) EXPECT_EQ(Dataset::check_sample(d.schema(), s), "");
  }
  const Dataset plain = resample(d, {ResampleKind::smote, 3, 3}, 2);
  const Dataset cleaned = resample(d, {ResampleKind::smote_tomek, 3, 3}, 2);
  const auto ref = class_distribution(d);
  std::set<std::size_t> expect_removed;
  for (const auto& [i, j] : tomek_links(plain)) {
    const auto si = ref.at(plain[i].target), sj = ref.at(plain[j].target);
    if (si >= sj) expect_removed.insert(i);
    if (sj >= si) expect_removed.insert(j);
  }
  EXPECT_EQ(cleaned.size(), plain.size() - expect_removed.size());
}

TEST(ResampleMethod, Json) {
  EXPECT_EQ(resample_method_from_json(nlohmann::json("rus")).kind, ResampleKind::random_under_majority);
  const auto m = resample_method_from_json(nlohmann::json::parse(R"({"kind": "smote_enn", "smote_k": 4})"));
  EXPECT_EQ(m.smote_k, 4u);
  EXPECT_EQ(resample_method_from_json(to_json(m)).kind, ResampleKind::smote_enn);
  EXPECT_THROW(resample_method_from_json(nlohmann::json("adasyn")), ConfigError);
  EXPECT_THROW(resample_method_from_json(nlohmann::json::parse(R"({"kind": "smote", "smote_k": 0})")), ConfigError);
}
