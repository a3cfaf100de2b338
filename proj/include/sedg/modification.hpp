#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/classifiers.hpp"
#include "sedg/data.hpp"
#include "sedg/embeddings.hpp"
#include "sedg/selection.hpp"

namespace sedg {

/// pn / pc / en / ec / r in comparison tables.
enum class ModificationMode { random, embed_cosine, embed_nn, pca_cosine, pca_nn };

const char* to_string(ModificationMode m);
/// Short table label: r, ec, en, pc, pn.
const char* short_label(ModificationMode m);
ModificationMode modification_mode_from_string(const std::string& s);

struct ModificationStrategy {
  ModificationMode mode = ModificationMode::embed_cosine;
  Granularity granularity = Granularity::per_feature;
  std::size_t max_candidates = 20;
  std::size_t continuous_step_count = 10;
  /// Whole-sample search continues from the updated sample after each feature.
  bool chain_updates = true;
};

nlohmann::json to_json(const ModificationStrategy& s);
ModificationStrategy modification_strategy_from_json(const nlohmann::json& j);

/// Candidate replacement values (raw sample values: codes or continuous
/// values) for one feature, ascending and never equal to `current`.
/// Discrete: the whole domain when it has at most max_candidates other
/// values, else a random subset of that size. Continuous: step_count evenly
/// spaced points over [min, max], snapped to the step lattice, de-duplicated.
std::vector<double> candidate_values(const FeatureSpec& spec, double current, std::size_t max_candidates,
                                     std::size_t continuous_step_count, Rng& rng);

struct ModifiedSample {
  Sample sample;
  /// Features whose value differs from the source.
  std::vector<std::size_t> changed;
  /// Every candidate list was empty; the sample is an unmodified copy.
  bool noop = false;
};

/// Replaces the selected features in order with the most similar candidate
/// (or a uniform candidate in random mode). Ties go to the lowest candidate.
/// `embedder` may be null in random mode; PCA modes need a fitted projection.
ModifiedSample modify_sample(const Sample& sample, const std::vector<std::size_t>& features, const Schema& schema,
                             const Embedder* embedder, const ModificationStrategy& strategy, Rng& rng);

struct GenerationPlan {
  SelectionPolicy selection;
  WeightingKind weighting = WeightingKind::random;
  CountRange feature_count{1, 3};
  ModificationStrategy strategy;
  std::size_t count = 200;
  std::size_t permutation_repeats = 5;
  /// Share of the training set held out when importances need test data.
  double importance_holdout = 0.3;
};

nlohmann::json to_json(const GenerationPlan& p);
/// A policy without an explicit "k" takes the plan's count.
GenerationPlan generation_plan_from_json(const nlohmann::json& j);

/// Models a plan may consult.
struct GenerationModels {
  /// Trained classifier (PeSS losses, gini importance).
  const Classifier* trained = nullptr;
  /// Untrained prototype (PPSS probe, permutation and drop-column importance).
  const Classifier* prototype = nullptr;
  std::shared_ptr<const Embedder> embedder;
  /// Precomputed feature weighting; computed from the training set when null.
  const FeatureWeighting* weighting = nullptr;
};

FeatureWeighting compute_weighting(WeightingKind kind, const Dataset& train, const GenerationModels& models,
                                   std::size_t permutation_repeats, double holdout, std::uint64_t seed);

struct GeneratedBatch {
  Dataset samples;
  /// Index into the training set of each output's source sample.
  std::vector<std::size_t> source_index;
  std::vector<std::vector<std::size_t>> changed;
  std::vector<bool> noop;
  std::size_t noop_count = 0;
  SamplePool pool;
  FeatureWeighting weighting;
};

GeneratedBatch generate_batch(const Dataset& train, const GenerationPlan& plan, const GenerationModels& models,
                              std::uint64_t seed);

}  // namespace sedg
