#include "sedg/modification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sedg/config.hpp"

namespace sedg {

const char* to_string(ModificationMode m) {
  switch (m) {
    case ModificationMode::random: return "random";
    case ModificationMode::embed_cosine: return "embed_cosine";
    case ModificationMode::embed_nn: return "embed_nn";
    case ModificationMode::pca_cosine: return "pca_cosine";
    case ModificationMode::pca_nn: return "pca_nn";
  }
  return "?";
}

const char* short_label(ModificationMode m) {
  switch (m) {
    case ModificationMode::random: return "r";
    case ModificationMode::embed_cosine: return "ec";
    case ModificationMode::embed_nn: return "en";
    case ModificationMode::pca_cosine: return "pc";
    case ModificationMode::pca_nn: return "pn";
  }
  return "?";
}

ModificationMode modification_mode_from_string(const std::string& s) {
  for (auto m : {ModificationMode::random, ModificationMode::embed_cosine, ModificationMode::embed_nn,
                 ModificationMode::pca_cosine, ModificationMode::pca_nn})
    if (s == to_string(m) || s == short_label(m)) return m;
  throw ConfigError("unknown modification mode '" + s + "'");
}

nlohmann::json to_json(const ModificationStrategy& s) {
  return {{"mode", to_string(s.mode)},
          {"granularity", to_string(s.granularity)},
          {"max_candidates", s.max_candidates},
          {"continuous_step_count", s.continuous_step_count},
          {"chain_updates", s.chain_updates}};
}

ModificationStrategy modification_strategy_from_json(const nlohmann::json& j) {
  check_keys(j, {"mode", "granularity", "max_candidates", "continuous_step_count", "chain_updates"},
             "modification strategy");
  ModificationStrategy s;
  if (j.contains("mode")) s.mode = modification_mode_from_string(j["mode"].get<std::string>());
  if (j.contains("granularity")) s.granularity = granularity_from_string(j["granularity"].get<std::string>());
  s.max_candidates = get_or(j, "max_candidates", s.max_candidates);
  s.continuous_step_count = get_or(j, "continuous_step_count", s.continuous_step_count);
  s.chain_updates = get_or(j, "chain_updates", s.chain_updates);
  if (s.max_candidates < 1) throw ConfigError("max_candidates must be >= 1");
  if (s.continuous_step_count < 2) throw ConfigError("continuous_step_count must be >= 2");
  return s;
}

std::vector<double> candidate_values(const FeatureSpec& spec, double current, std::size_t max_candidates,
                                     std::size_t continuous_step_count, Rng& rng) {
  if (max_candidates < 1) throw std::invalid_argument("max_candidates must be >= 1");
  std::vector<double> out;
  if (spec.is_discrete()) {
    for (std::size_t c = 0; c < spec.cardinality(); ++c)
      if (static_cast<double>(c) != current) out.push_back(static_cast<double>(c));
    if (out.size() > max_candidates) {
      shuffle_in_place(out, rng);
      out.resize(max_candidates);
      std::sort(out.begin(), out.end());
    }
    return out;
  }
  if (continuous_step_count < 2) throw std::invalid_argument("continuous_step_count must be >= 2");
  const double width = spec.max - spec.min;
  for (std::size_t i = 0; i < continuous_step_count; ++i) {
    const double v =
        spec.snap(spec.min + width * static_cast<double>(i) / static_cast<double>(continuous_step_count - 1));
    if (std::abs(v - current) <= 1e-9 * std::max(1.0, std::abs(current))) continue;
    if (!out.empty() && std::abs(out.back() - v) <= 1e-12) continue;
    out.push_back(v);
  }
  return out;
}

namespace {

bool uses_pca(ModificationMode m) { return m == ModificationMode::pca_cosine || m == ModificationMode::pca_nn; }
bool uses_cosine(ModificationMode m) {
  return m == ModificationMode::embed_cosine || m == ModificationMode::pca_cosine;
}

// Larger is more similar.
double similarity(ModificationMode m, const RowVector& a, const RowVector& b) {
  return uses_cosine(m) ? cosine_similarity(a, b) : -(a - b).norm();
}

}  // namespace

ModifiedSample modify_sample(const Sample& sample, const std::vector<std::size_t>& features, const Schema& schema,
                             const Embedder* embedder, const ModificationStrategy& strategy, Rng& rng) {
  const bool random = strategy.mode == ModificationMode::random;
  if (!random) {
    if (!embedder) throw std::invalid_argument("modification mode '" + std::string(to_string(strategy.mode)) +
                                               "' needs an embedder");
    if (strategy.granularity == Granularity::per_feature &&
        (embedder->source() != EmbeddingSource::classifier_transfer ||
         embedder->granularity() != Granularity::per_feature))
      throw UnsupportedError("per-feature modification needs a per-feature classifier embedding");
    if (uses_pca(strategy.mode)) {
      const bool ok = strategy.granularity == Granularity::per_feature ? !embedder->feature_pca().empty()
                                                                        : embedder->sample_pca().has_value();
      if (!ok) throw std::logic_error("PCA modification modes need a fitted projection");
    }
  }
  Encoder enc(schema);
  const bool pca = uses_pca(strategy.mode);

  ModifiedSample out;
  out.sample = sample;
  out.sample.synthetic = true;
  Sample reference = sample;
  bool any_candidates = false;

  auto embed_sample = [&](const Sample& s) {
    RowVector row = enc.encode_sample(s);
    return pca ? embedder->reduced_row(row) : embedder->embed_row(row);
  };

  for (std::size_t f : features) {
    if (f >= schema.size()) throw std::out_of_range("feature index out of range");
    const Sample& base = strategy.chain_updates ? out.sample : reference;
    const auto cands = candidate_values(schema[f], base.features[f], strategy.max_candidates,
                                        strategy.continuous_step_count, rng);
    if (cands.empty()) continue;
    any_candidates = true;
    std::size_t pick = 0;
    if (random) {
      pick = uniform_index(rng, cands.size());
    } else if (strategy.granularity == Granularity::per_feature) {
      auto embed_value = [&](double raw) {
        const double e = enc.encode_value(f, raw);
        return pca ? embedder->reduced_value(f, e) : embedder->embed_value(f, e);
      };
      const RowVector current = embed_value(base.features[f]);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < cands.size(); ++i) {
        const double s = similarity(strategy.mode, current, embed_value(cands[i]));
        if (s > best) {
          best = s;
          pick = i;
        }
      }
    } else {
      const RowVector current = embed_sample(base);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < cands.size(); ++i) {
        Sample trial = base;
        trial.features[f] = cands[i];
        const double s = similarity(strategy.mode, current, embed_sample(trial));
        if (s > best) {
          best = s;
          pick = i;
        }
      }
    }
    out.sample.features[f] = cands[pick];
  }
  out.noop = !any_candidates;
  for (std::size_t f = 0; f < schema.size(); ++f)
    if (out.sample.features[f] != sample.features[f]) out.changed.push_back(f);
  return out;
}

nlohmann::json to_json(const GenerationPlan& p) {
  return {{"selection", to_json(p.selection)},
          {"weighting", to_string(p.weighting)},
          {"feature_count", to_json(p.feature_count)},
          {"strategy", to_json(p.strategy)},
          {"count", p.count},
          {"permutation_repeats", p.permutation_repeats},
          {"importance_holdout", p.importance_holdout}};
}

GenerationPlan generation_plan_from_json(const nlohmann::json& j) {
  check_keys(j, {"selection", "weighting", "feature_count", "strategy", "count", "permutation_repeats",
                 "importance_holdout"},
             "generation plan");
  GenerationPlan p;
  p.count = get_or(j, "count", p.count);
  if (j.contains("selection")) {
    p.selection = selection_policy_from_json(j["selection"]);
    if (!j["selection"].contains("k")) p.selection.k = CountRange::fixed(std::max<std::size_t>(1, p.count));
  } else {
    p.selection.k = CountRange::fixed(std::max<std::size_t>(1, p.count));
  }
  if (j.contains("weighting")) p.weighting = weighting_kind_from_string(j["weighting"].get<std::string>());
  if (j.contains("feature_count")) p.feature_count = count_range_from_json(j["feature_count"]);
  if (j.contains("strategy")) p.strategy = modification_strategy_from_json(j["strategy"]);
  p.permutation_repeats = get_or(j, "permutation_repeats", p.permutation_repeats);
  p.importance_holdout = get_or(j, "importance_holdout", p.importance_holdout);
  if (p.feature_count.min < 1) throw ConfigError("feature_count must be >= 1");
  if (p.permutation_repeats < 1) throw ConfigError("permutation_repeats must be >= 1");
  if (!(p.importance_holdout > 0.0 && p.importance_holdout < 1.0))
    throw ConfigError("importance_holdout must lie in (0, 1)");
  return p;
}

FeatureWeighting compute_weighting(WeightingKind kind, const Dataset& train, const GenerationModels& models,
                                   std::size_t permutation_repeats, double holdout, std::uint64_t seed) {
  switch (kind) {
    case WeightingKind::random: return random_weights(train.schema());
    case WeightingKind::imbalance: return imbalance_weights(train);
    case WeightingKind::gini_importance:
      if (!models.trained) throw std::invalid_argument("gini importance needs a trained classifier");
      return gini_importance(*models.trained, train.schema());
    case WeightingKind::permutation_importance: {
      if (!models.prototype) throw std::invalid_argument("permutation importance needs a classifier prototype");
      auto [fit_part, held] = split(train, holdout, derive_seed(seed, 1));
      auto model = models.prototype->clone();
      model->fit(fit_part);
      return permutation_importance(*model, held, permutation_repeats, derive_seed(seed, 2));
    }
    case WeightingKind::drop_column_importance: {
      if (!models.prototype) throw std::invalid_argument("drop-column importance needs a classifier prototype");
      auto [fit_part, held] = split(train, holdout, derive_seed(seed, 1));
      return drop_column_importance(*models.prototype, fit_part, held);
    }
  }
  return random_weights(train.schema());
}

GeneratedBatch generate_batch(const Dataset& train, const GenerationPlan& plan, const GenerationModels& models,
                              std::uint64_t seed) {
  GeneratedBatch batch;
  batch.samples = train.with_samples({});
  if (plan.count == 0) return batch;
  if (train.empty()) throw std::invalid_argument("generate_batch: empty training set");

  const Classifier* selector =
      plan.selection.kind == SelectionKind::ppss ? (models.prototype ? models.prototype : models.trained)
                                                 : models.trained;
  batch.pool = select_samples(train, plan.selection, selector, derive_seed(seed, 1));
  if (batch.pool.indices.empty()) throw std::runtime_error("generate_batch: sample selection returned no samples");
  batch.weighting = models.weighting ? *models.weighting
                                     : compute_weighting(plan.weighting, train, models, plan.permutation_repeats,
                                                         plan.importance_holdout, derive_seed(seed, 2));

  std::vector<Sample> out;
  out.reserve(plan.count);
  for (std::size_t i = 0; i < plan.count; ++i) {
    const std::size_t src = batch.pool.indices[i % batch.pool.indices.size()];
    Rng rng(derive_seed(seed, 1000 + i));
    const auto features = select_features(batch.weighting, plan.feature_count, rng);
    ModifiedSample m;
    try {
      m = modify_sample(train[src], features, train.schema(), models.embedder.get(), plan.strategy, rng);
    } catch (const std::exception& e) {
      throw std::runtime_error("synthetic sample " + std::to_string(i) + " (source " + std::to_string(src) +
                               "): " + e.what());
    }
    batch.source_index.push_back(src);
    batch.changed.push_back(m.changed);
    batch.noop.push_back(m.noop);
    if (m.noop) ++batch.noop_count;
    out.push_back(std::move(m.sample));
  }
  if (batch.noop_count > 0)
    log_warning(std::to_string(batch.noop_count) + " synthetic samples had no modifiable feature");
  batch.samples = train.with_samples(std::move(out));
  return batch;
}

}  // namespace sedg
