#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/baselines.hpp"
#include "sedg/classifiers.hpp"
#include "sedg/dgm.hpp"
#include "sedg/embeddings.hpp"
#include "sedg/metrics.hpp"
#include "sedg/modification.hpp"
#include "sedg/usage.hpp"

namespace sedg {

struct DatasetConfig {
  /// Empty: $SEDG_DATA, then data/student-por.csv, then the bundled stand-in.
  std::string path;
  /// Empty: the built-in student schema.
  std::string schema;
  bool include_period_grades = true;
};

nlohmann::json to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

/// Resolves and loads the configured dataset. `base_dir` anchors relative paths.
Dataset load_dataset(const DatasetConfig& c, const std::filesystem::path& base_dir = {});

/// How the embedder used by modification or preprocessing is obtained.
struct EmbeddingConfig {
  EmbeddingSource source = EmbeddingSource::classifier_transfer;
  Granularity granularity = Granularity::per_feature;
  /// PCA components for the pca_* modes; 0 keeps 95% of the variance.
  std::size_t pca_components = 0;
  /// Network trained for classifier transfer.
  nn::NnModelConfig model;
  /// Bottleneck size for the autoencoder sources.
  std::size_t bottleneck = 8;
  nn::TrainConfig train;
};

nlohmann::json to_json(const EmbeddingConfig& c);
EmbeddingConfig embedding_config_from_json(const nlohmann::json& j);

/// Trains the configured embedding model on `train`. When `trained` is an
/// NN classifier fitted on `train`, classifier transfer reuses its network.
std::shared_ptr<Embedder> build_embedder(const Dataset& train, const EmbeddingConfig& cfg, bool need_pca,
                                         std::uint64_t seed, const Classifier* trained = nullptr);

enum class MethodKind { none, baseline, sedg, dgm, embedding_preprocess };

const char* to_string(MethodKind k);

struct MethodConfig {
  MethodKind kind = MethodKind::none;
  /// Row label in grid tables; derived from the method when empty.
  std::string label;
  ResampleMethod baseline;
  GenerationPlan plan;
  UsagePolicy usage;
  EmbeddingConfig embedding;
  DgmConfig dgm;
  nn::TrainConfig dgm_train;
  /// Set when the plan's selection names its own k.
  bool plan_k_explicit = false;

  std::string display_label() const;
  /// The plan with `count` outputs; k follows count unless given explicitly.
  GenerationPlan effective_plan(std::size_t count) const;
};

nlohmann::json to_json(const MethodConfig& m);
MethodConfig method_config_from_json(const nlohmann::json& j);

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetConfig dataset;
  std::string classifier = "nn";
  nlohmann::json classifier_config = nlohmann::json::object();
  MethodConfig method;
  std::size_t trials = 50;
  double test_fraction = 0.4;
  std::size_t synthetic_count = 200;
  std::uint64_t root_seed = 0;
  /// Redraw the split every trial; false reuses one split for all trials.
  bool resplit = true;
  /// Worker threads; 0 uses the hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  bool ok = false;
  std::string error;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t treated_train_size = 0;
  MetricReport baseline;
  MetricReport treated;
  double pi_accuracy = 0.0;
  double pi_macro_auc = 0.0;
  /// Classes evaluated in both runs.
  std::map<int, double> pi_class_auc;
};

nlohmann::json to_json(const TrialRecord& t);
TrialRecord trial_record_from_json(const nlohmann::json& j);

struct PiStats {
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

struct PiSummary {
  PiStats accuracy;
  PiStats macro_auc;
  std::map<int, PiStats> class_auc;
};

nlohmann::json to_json(const PiSummary& s);

/// Max, mean and sample standard deviation over the successful trials.
PiSummary summarize(const std::vector<TrialRecord>& trials);

struct ExperimentReport {
  std::string name;
  nlohmann::json config;
  std::string config_hash;
  std::vector<TrialRecord> trials;
  PiSummary summary;

  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
};

/// Runs one trial; failures are returned as records with ok = false.
TrialRecord run_trial(const ExperimentConfig& cfg, const Dataset& data, std::size_t trial);
ExperimentReport run_experiment(const ExperimentConfig& cfg, const Dataset& data);

/// Per-trial PI rows: trial,metric,class,baseline,treated,pi.
std::string trials_csv(const ExperimentReport& r);

struct GridConfig {
  ExperimentConfig base;
  std::vector<MethodConfig> methods;
};

GridConfig grid_config_from_json(const nlohmann::json& j);

struct GridRow {
  std::string label;
  std::optional<ExperimentReport> report;
  std::string error;
  std::size_t failed_trials = 0;
};

struct GridResult {
  std::vector<GridRow> rows;
  nlohmann::json to_json() const;
  /// One line per method, metric and class: method,metric,class,max,mean,std,n.
  std::string csv() const;
};

/// Every method runs with the base config, so all rows share split seeds.
GridResult run_grid(const GridConfig& grid, const Dataset& data);

struct ClassExplanation {
  int label = 0;
  std::size_t generated = 0;
  /// Per feature: share of the batch in which the feature changed.
  std::vector<double> likelihood;
  /// Per feature: chosen value -> count, over the changed outputs.
  std::vector<std::map<double, std::size_t>> histogram;
  std::string note;
};

struct ExplainReport {
  std::vector<std::string> feature_names;
  std::vector<ClassExplanation> classes;

  nlohmann::json to_json() const;
  /// class,feature,likelihood
  std::string likelihood_csv() const;
  /// class,feature,value,count
  std::string histogram_csv() const;
};

/// Tallies a generated batch into per-feature likelihoods and histograms.
ClassExplanation tally_batch(const Schema& schema, int label, const GeneratedBatch& batch);

/// n_per_class samples per class, seeded from that class's members. The
/// feature weighting is computed once on the full training set.
ExplainReport explain_plan(const Dataset& train, const GenerationPlan& plan, const GenerationModels& models,
                           std::size_t n_per_class, std::uint64_t seed);
ExplainReport explain_dgm(const DgmModel& model, const Dataset& train, std::size_t n_per_class,
                          std::uint64_t seed);

/// Builds the models a configured method needs on `train` and explains it.
ExplainReport explain_experiment(const ExperimentConfig& cfg, const Dataset& data, std::size_t n_per_class);

/// Synthetic batch that the configured method would add in trial `trial`.
GeneratedBatch generate_for_trial(const ExperimentConfig& cfg, const Dataset& data, std::size_t trial);

}  // namespace sedg
