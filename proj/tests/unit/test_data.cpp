#include <gtest/gtest.h>

#include <cmath>

#include "sedg/bench.hpp"
#include "sedg/data.hpp"
#include "support/oracles.hpp"

using namespace sedg;

TEST(Schema, FormatParseRoundTrip) {
  const Schema s = student_schema(true);
  const Schema back = parse_schema(format_schema(s));
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t f = 0; f < s.size(); ++f) {
    EXPECT_EQ(back[f].name, s[f].name);
    EXPECT_EQ(back[f].kind, s[f].kind);
    EXPECT_EQ(back[f].values, s[f].values);
    EXPECT_EQ(back[f].group, s[f].group);
  }
  EXPECT_EQ(back.target.max_class, 20);
}

TEST(Schema, StudentShape) {
  EXPECT_EQ(student_schema(true).size(), 32u);
  EXPECT_EQ(student_schema(false).size(), 30u);
  EXPECT_EQ(student_schema(true).without_groups({"period_grade"}).size(), 30u);
  EXPECT_EQ(student_schema().num_classes(), 21);
}

TEST(Schema, RejectsBadDomains) {
  EXPECT_THROW(parse_schema("feature name=a kind=discrete values=x,x\n"), SchemaError);
  EXPECT_THROW(parse_schema("feature name=a kind=continuous min=3 max=1 step=1\n"), SchemaError);
  EXPECT_THROW(parse_schema("feature name=a kind=weird\n"), SchemaError);
}

TEST(Schema, NumericCodesSortNaturally) {
  const Schema s = parse_schema("feature name=a kind=discrete values=10,2,1\ntarget name=t min=0 max=1\n");
  EXPECT_EQ(s[0].values, (std::vector<std::string>{"1", "2", "10"}));
}

TEST(FeatureSpec, SnapAndAdmit) {
  const auto c = FeatureSpec::continuous("x", 0, 10, 0.5);
  EXPECT_DOUBLE_EQ(c.snap(3.26), 3.5);
  EXPECT_DOUBLE_EQ(c.snap(-4), 0.0);
  EXPECT_DOUBLE_EQ(c.snap(12), 10.0);
  EXPECT_TRUE(c.admits(2.5));
  EXPECT_FALSE(c.admits(2.25));
  EXPECT_FALSE(c.admits(10.5));
  const auto d = FeatureSpec::discrete("d", {"a", "b"});
  EXPECT_TRUE(d.admits(1));
  EXPECT_FALSE(d.admits(2));
  EXPECT_FALSE(d.admits(0.5));
}

TEST(Csv, ParsesQuotedFieldsAndIgnoresExtraColumns) {
  const Schema s = oracle::toy_schema(2);
  const std::string text =
      "\"colour\";\"extra\";\"size\";\"flag\";\"x\";\"y\";\"label\"\n"
      "\"red\";\"zz\";\"3\";\"yes\";2.5;-1;1\n"
      "blue;q;1;no;0;5;0\n";
  const Dataset d = parse_csv(text, s);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].features, (std::vector<double>{2, 2, 1, 2.5, -1}));
  EXPECT_EQ(d[0].target, 1);
  EXPECT_EQ(d[1].features, (std::vector<double>{0, 0, 0, 0, 5}));
}

TEST(Csv, ReportsOffendingRow) {
  const Schema s = oracle::toy_schema(2);
  const std::string text = "colour;size;flag;x;y;label\nred;3;yes;2.5;-1;1\nred;9;yes;2.5;-1;1\n";
  try {
    parse_csv(text, s);
    FAIL() << "expected RowError";
  } catch (const RowError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
  EXPECT_THROW(parse_csv("colour;size\nred;3\n", s), SchemaError);
}

TEST(Csv, WriteReadRoundTrip) {
  const Dataset d = oracle::toy_dataset({5, 6, 7});
  const Dataset back = parse_csv(format_csv(d), d.schema());
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back[i].features, d[i].features);
    EXPECT_EQ(back[i].target, d[i].target);
  }
}

TEST(Dataset, ClassIndexPartitionsRows) {
  const Dataset d = oracle::toy_dataset({4, 0, 3});
  std::size_t total = 0;
  for (const auto& [c, idx] : d.class_index()) {
    for (auto i : idx) EXPECT_EQ(d[i].target, c);
    total += idx.size();
  }
  EXPECT_EQ(total, d.size());
  EXPECT_EQ(d.classes_present(), (std::set<int>{0, 2}));
}

TEST(Dataset, RejectsOutOfDomainSamples) {
  const Schema s = oracle::toy_schema(2);
  Sample bad{{0, 0, 0, 0.25, 0}, 0};
  EXPECT_THROW(Dataset(s, {bad}), RowError);
  Sample bad_target{{0, 0, 0, 0.5, 0}, 7};
  EXPECT_THROW(Dataset(s, {bad_target}), RowError);
}

TEST(Split, StratifiedSizes) {
  const Dataset d = oracle::toy_dataset({50, 30, 1});
  auto [train, test] = split(d, 0.4, 3);
  EXPECT_EQ(train.size() + test.size(), d.size());
  EXPECT_EQ(test.size(), static_cast<std::size_t>(std::lround(0.4 * 81)));
  EXPECT_EQ(test.class_index().count(2), 0u);
  EXPECT_EQ(train.class_index().at(2).size(), 1u);
  EXPECT_EQ(test.class_index().at(0).size(), 20u);
  EXPECT_EQ(test.class_index().at(1).size(), 12u);
}

TEST(Split, DeterministicPerSeed) {
  const Dataset d = oracle::toy_dataset({20, 20});
  auto [a1, b1] = split(d, 0.3, 9);
  auto [a2, b2] = split(d, 0.3, 9);
  auto [a3, b3] = split(d, 0.3, 10);
  EXPECT_EQ(format_csv(b1), format_csv(b2));
  EXPECT_NE(format_csv(b1), format_csv(b3));
}

TEST(Encoder, ScalesContinuousAndKeepsCodes) {
  const Dataset d = oracle::toy_dataset({3, 3});
  const Encoder enc(d.schema());
  const Matrix x = enc.encode(d);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto& s = d[static_cast<std::size_t>(r)];
    EXPECT_EQ(x(r, 0), s.features[0]);
    EXPECT_NEAR(x(r, 3), s.features[3] / 10.0, 1e-12);
    EXPECT_NEAR(x(r, 4), (s.features[4] + 5.0) / 10.0, 1e-12);
    const Sample back = enc.decode_row(x.row(r), s.target);
    EXPECT_EQ(back.features, s.features);
  }
  EXPECT_EQ(enc.one_hot_width(), 3u + 4u + 2u + 1u + 1u);
  const Matrix oh = enc.one_hot(d);
  for (Eigen::Index r = 0; r < oh.rows(); ++r) EXPECT_DOUBLE_EQ(oh.row(r).head(9).sum(), 3.0);
}

TEST(Encoder, DecodeSnapsOffGridValues) {
  const Encoder enc(oracle::toy_schema(2));
  RowVector row(5);
  row << 1.4, 2.6, -1.0, 0.33, 2.0;
  const Sample s = enc.decode_row(row, 0);
  EXPECT_EQ(s.features, (std::vector<double>{1, 3, 0, 3.5, 5}));
}

TEST(StandIn, LoadsWithPaperShape) {
  DatasetConfig dc;
  const Dataset d = load_dataset(dc);
  EXPECT_EQ(d.size(), 649u);
  EXPECT_EQ(d.num_features(), 32u);
  const auto dist = class_distribution(d);
  EXPECT_EQ(dist.at(11), 104u);
  EXPECT_EQ(dist.at(0), 15u);
}
