#include <gtest/gtest.h>

#include "sedg/bench.hpp"
#include "support/oracles.hpp"

using namespace sedg;

namespace {

ExperimentConfig tree_config(const std::string& method_json, std::size_t trials = 3) {
  auto j = nlohmann::json::parse(R"({"name": "t", "classifier": "decision_tree",
                                     "classifier_config": {"max_depth": 4}, "root_seed": 5,
                                     "synthetic_count": 20})");
  j["method"] = nlohmann::json::parse(method_json);
  j["trials"] = trials;
  return experiment_config_from_json(j);
}

}  // namespace

TEST(Bench, NoneGivesZeroImprovement) {
  const Dataset d = oracle::toy_dataset({20, 30, 10});
  const auto r = run_experiment(tree_config(R"("none")"), d);
  ASSERT_EQ(r.trials.size(), 3u);
  for (const auto& t : r.trials) {
    ASSERT_TRUE(t.ok) << t.error;
    EXPECT_EQ(t.pi_accuracy, 0.0);
    EXPECT_EQ(t.pi_macro_auc, 0.0);
    for (const auto& [c, v] : t.pi_class_auc) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(r.summary.accuracy.max, 0.0);
  EXPECT_EQ(r.summary.macro_auc.std, 0.0);
}

TEST(Bench, DeterministicAcrossThreadCounts) {
  const Dataset d = oracle::toy_dataset({20, 30, 10});
  auto cfg = tree_config(R"({"kind": "sedg", "plan": {"strategy": {"mode": "random"}}})", 4);
  cfg.threads = 1;
  const auto a = run_experiment(cfg, d);
  cfg.threads = 3;
  const auto b = run_experiment(cfg, d);
  auto ja = a.to_json(), jb = b.to_json();
  ja["config"].erase("threads");
  jb["config"].erase("threads");
  ja.erase("config_hash");
  jb.erase("config_hash");
  EXPECT_EQ(ja.dump(), jb.dump());
}

TEST(Bench, ResplitControlsSplitSeeds) {
  const Dataset d = oracle::toy_dataset({20, 30, 10});
  auto cfg = tree_config(R"("smote")");
  const auto r = run_experiment(cfg, d);
  EXPECT_NE(r.trials[0].split_seed, r.trials[1].split_seed);
  cfg.resplit = false;
  const auto f = run_experiment(cfg, d);
  EXPECT_EQ(f.trials[0].split_seed, f.trials[2].split_seed);
}

TEST(Bench, SummaryMatchesHandStatistics) {
  std::vector<TrialRecord> t(4);
  const double v[] = {0.1, -0.2, 0.3, 0.0};
  for (int i = 0; i < 4; ++i) {
    t[i].ok = i != 3;
    t[i].pi_accuracy = v[i];
    t[i].pi_macro_auc = 2 * v[i];
    t[i].pi_class_auc = {{1, v[i]}};
  }
  const auto s = summarize(t);
  EXPECT_EQ(s.accuracy.n, 3u);
  EXPECT_DOUBLE_EQ(s.accuracy.max, 0.3);
  EXPECT_NEAR(s.accuracy.mean, 0.2 / 3.0, 1e-12);
  const double m = 0.2 / 3.0;
  const double var = ((0.1 - m) * (0.1 - m) + (-0.2 - m) * (-0.2 - m) + (0.3 - m) * (0.3 - m)) / 2.0;
  EXPECT_NEAR(s.accuracy.std, std::sqrt(var), 1e-12);
  EXPECT_NEAR(s.macro_auc.max, 0.6, 1e-12);
  EXPECT_EQ(s.class_auc.at(1).n, 3u);
}

TEST(Bench, ReportJsonRoundTripRecomputesSummary) {
  const Dataset d = oracle::toy_dataset({20, 30, 10});
  const auto r = run_experiment(tree_config(R"("random_over")"), d);
  const auto back = ExperimentReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json().dump(), r.to_json().dump());
  EXPECT_EQ(back.config_hash.size(), 16u);
  EXPECT_FALSE(trials_csv(r).empty());
}

TEST(Bench, GridRunsEveryMethod) {
  const Dataset d = oracle::toy_dataset({20, 30, 10});
  GridConfig g;
  g.base = tree_config(R"("none")", 2);
  g.methods = {method_config_from_json(nlohmann::json("none")), method_config_from_json(nlohmann::json("enn")),
               method_config_from_json(nlohmann::json::parse(
                   R"({"kind": "dgm", "dgm": {"kind": "gen_ae", "latent_dim": 3}, "dgm_train": {"max_epochs": 2}})"))};
  const auto res = run_grid(g, d);
  ASSERT_EQ(res.rows.size(), 3u);
  for (const auto& row : res.rows) {
    ASSERT_TRUE(row.report.has_value()) << row.label << ": " << row.error;
    EXPECT_EQ(row.failed_trials, 0u);
  }
  EXPECT_EQ(res.rows[0].report->trials[1].split_seed, res.rows[1].report->trials[1].split_seed);
  const std::string csv = res.csv();
  EXPECT_EQ(csv.rfind("method,metric,class,max,mean,std,n", 0), 0u);
}

TEST(Bench, ConfigErrors) {
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"trials": 0})")), ConfigError);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"trails": 3})")), ConfigError);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"test_fraction": 1.2})")), ConfigError);
  EXPECT_THROW(method_config_from_json(nlohmann::json("adasyn")), ConfigError);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(
                   R"({"method": {"kind": "dgm", "dgm": {"selection": {"kind": "ppss"}}}})")),
               ConfigError);
}

TEST(Bench, FailingTrialIsRecorded) {
  const Dataset d = oracle::toy_dataset({20, 30, 10});
  auto cfg = tree_config(R"({"kind": "sedg", "plan": {"weighting": "gini_importance"}})", 1);
  cfg.classifier = "svm_ovr";
  cfg.classifier_config = nlohmann::json::object();
  const auto r = run_experiment(cfg, d);
  EXPECT_FALSE(r.trials[0].ok);
  EXPECT_FALSE(r.trials[0].error.empty());
  EXPECT_EQ(r.summary.accuracy.n, 0u);
}

TEST(Explain, TallyMatchesManualCount) {
  const Dataset d = oracle::toy_dataset({3, 3});
  GeneratedBatch b;
  std::vector<Sample> rows;
  for (int i = 0; i < 4; ++i) rows.push_back(d[0]);
  rows[0].features[1] = 3;
  rows[1].features[1] = 3;
  rows[2].features[1] = 2;
  rows[2].features[4] = 4;
  b.samples = d.with_samples(rows);
  b.changed = {{1}, {1}, {1, 4}, {}};
  b.source_index = {0, 0, 0, 0};
  b.noop = {false, false, false, true};
  const auto e = tally_batch(d.schema(), 0, b);
  EXPECT_EQ(e.generated, 4u);
  EXPECT_DOUBLE_EQ(e.likelihood[1], 0.75);
  EXPECT_DOUBLE_EQ(e.likelihood[4], 0.25);
  EXPECT_DOUBLE_EQ(e.likelihood[0], 0.0);
  EXPECT_EQ(e.histogram[1].at(3.0), 2u);
  EXPECT_EQ(e.histogram[1].at(2.0), 1u);
  EXPECT_EQ(e.histogram[4].at(4.0), 1u);
}

TEST(Explain, PlanReportCoversEveryClass) {
  const Dataset d = oracle::toy_dataset({10, 12, 8});
  GenerationPlan p;
  p.strategy.mode = ModificationMode::random;
  const auto r = explain_plan(d, p, {}, 25, 3);
  ASSERT_EQ(r.classes.size(), 3u);
  for (const auto& c : r.classes) {
    EXPECT_EQ(c.generated, 25u);
    double total = 0.0;
    for (double l : c.likelihood) total += l;
    // Between one and three features change per output.
    EXPECT_GE(total, 1.0 - 1e-12);
    EXPECT_LE(total, 3.0 + 1e-12);
  }
  EXPECT_NE(r.likelihood_csv().find("class,feature,likelihood"), std::string::npos);
  EXPECT_NE(r.histogram_csv().find("class,feature,value,count"), std::string::npos);
}

TEST(Explain, ExperimentRejectsBaselines) {
  const Dataset d = oracle::toy_dataset({10, 12, 8});
  EXPECT_ANY_THROW(explain_experiment(tree_config(R"("smote")"), d, 5));
}
