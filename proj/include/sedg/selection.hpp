#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/classifiers.hpp"
#include "sedg/data.hpp"

namespace sedg {

/// Fixed count (min == max) or a count drawn uniformly from [min, max].
struct CountRange {
  std::size_t min = 1;
  std::size_t max = 1;

  static CountRange fixed(std::size_t n) { return {n, n}; }
  std::size_t draw(Rng& rng) const;
};

nlohmann::json to_json(const CountRange& r);
/// Accepts an integer or a two-element [min, max] array.
CountRange count_range_from_json(const nlohmann::json& j);

enum class SelectionKind { rss, pass, pess, ppss };
enum class MemberMode { probabilistic, deterministic_max };
enum class CardinalityDirection { proportional, inverse };

struct SelectionPolicy {
  SelectionKind kind = SelectionKind::rss;
  CountRange k = CountRange::fixed(200);
  /// RSS: draw the pool without replacement.
  bool sample_without_replacement = true;
  // Partition-based options.
  MemberMode member_mode = MemberMode::probabilistic;
  CardinalityDirection direction = CardinalityDirection::proportional;
  /// Members may be drawn again after being used.
  bool member_replacement = true;
  CountRange m = CountRange::fixed(1);
  // Probe holdout used to estimate class AUCs for PPSS.
  double probe_holdout = 0.3;
};

const char* to_string(SelectionKind k);
SelectionKind selection_kind_from_string(const std::string& s);
nlohmann::json to_json(const SelectionPolicy& p);
SelectionPolicy selection_policy_from_json(const nlohmann::json& j);

/// Indices into the training set, in draw order.
struct SamplePool {
  std::vector<std::size_t> indices;
  /// Class label of each member draw (partition-based policies).
  std::vector<int> member_draws;
  /// Members ran out before the requested size was reached.
  bool short_pool = false;
};

/// Uniform draw of k indices out of n (without replacement unless told otherwise).
SamplePool rss(std::size_t n, std::size_t k, std::uint64_t seed, bool without_replacement = true);
SamplePool rss(const Dataset& train, std::size_t k, std::uint64_t seed, bool without_replacement = true);

/// Member-selection probabilities for the class partition: proportional to
/// |M_i| or, under the inverse direction, to 1 / |M_i|.
std::map<int, double> pass_member_probabilities(const Dataset& train, CardinalityDirection direction);
SamplePool pass_select(const Dataset& train, const SelectionPolicy& policy, std::uint64_t seed);

/// p_i = L_i / sum L, uniform when every loss is zero.
std::vector<double> pess_probabilities(const std::vector<double>& losses);
/// Draws k indices without replacement with probabilities renormalised after each draw.
SamplePool pess_select(const std::vector<double>& losses, std::size_t k, std::uint64_t seed);
/// Losses of `classifier` on its own training data.
SamplePool pess_select(const Dataset& train, const Classifier& classifier, std::size_t k, std::uint64_t seed);

/// q_c proportional to 1 - AUC_c over `classes`; classes without an AUC entry
/// count as 0.5. Uniform when every class has AUC 1.
std::map<int, double> ppss_member_probabilities(const std::map<int, double>& class_auc,
                                                const std::set<int>& classes);
SamplePool ppss_select(const Dataset& train, const std::map<int, double>& class_auc, std::size_t k,
                       std::uint64_t seed);
/// Class AUCs from a probe: a clone of `prototype` trained on a stratified
/// share of `train` and scored on the held-out remainder.
std::map<int, double> probe_class_auc(const Dataset& train, const Classifier& prototype, double holdout,
                                      std::uint64_t seed);

/// Dispatches on policy.kind. `classifier` is the trained model (PeSS) or
/// the prototype for the PPSS probe; it may be null for RSS and PaSS.
SamplePool select_samples(const Dataset& train, const SelectionPolicy& policy, const Classifier* classifier,
                          std::uint64_t seed);

// ------------------------------------------------------ feature weighting

enum class WeightingKind { random, imbalance, gini_importance, permutation_importance, drop_column_importance };

const char* to_string(WeightingKind k);
WeightingKind weighting_kind_from_string(const std::string& s);

struct FeatureWeighting {
  WeightingKind kind = WeightingKind::random;
  std::vector<std::string> names;
  /// Scores before clamping and normalisation.
  std::vector<double> raw;
  /// Non-negative, sums to 1.
  std::vector<double> weights;
  /// Every clamped score was zero, so weights fell back to uniform.
  bool uniform_fallback = false;

  nlohmann::json to_json() const;
};

/// Clamps negatives to 0 and normalises; all-zero input gives uniform weights.
FeatureWeighting make_weighting(WeightingKind kind, const Schema& schema, std::vector<double> raw);

FeatureWeighting random_weights(const Schema& schema);

/// Centroids of 1-D 2-means on `values`, initialised at min and max.
std::pair<double, double> two_means_1d(const std::vector<double>& values, std::size_t max_iter = 100);
/// |c_a - c_b| / max(counts); 0 for fewer than two counts.
double imbalance_ratio(const std::vector<double>& counts);
FeatureWeighting imbalance_weights(const Dataset& train);

FeatureWeighting permutation_importance(const Classifier& model, const Dataset& test, std::size_t repeats,
                                        std::uint64_t seed);
/// Retrains a clone of `prototype` per feature with that column held constant.
FeatureWeighting drop_column_importance(const Classifier& prototype, const Dataset& train, const Dataset& test);
/// Throws UnsupportedError unless `model` is a tree-based classifier on raw encodings.
FeatureWeighting gini_importance(const Classifier& model, const Schema& schema);

/// Copy of `d` with feature `f` set to its first domain value in every row.
Dataset neutralize_feature(const Dataset& d, std::size_t f);

/// Draws `count` distinct feature indices, probabilities proportional to the
/// weights and renormalised after each draw; uniform over the remaining
/// indices once their weights are exhausted. Returned in draw order.
std::vector<std::size_t> select_features(const std::vector<double>& weights, std::size_t count, Rng& rng);
std::vector<std::size_t> select_features(const FeatureWeighting& w, const CountRange& count, Rng& rng);

/// Weighted draw of k distinct indices (the engine behind select_features and PeSS).
std::vector<std::size_t> weighted_without_replacement(const std::vector<double>& weights, std::size_t k, Rng& rng);

}  // namespace sedg
