#include "sedg/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sedg/config.hpp"
#include "sedg/metrics.hpp"

namespace sedg {

std::size_t CountRange::draw(Rng& rng) const {
  if (max < min) throw std::invalid_argument("count range has max < min");
  if (min == max) return min;
  return min + uniform_index(rng, max - min + 1);
}

nlohmann::json to_json(const CountRange& r) {
  if (r.min == r.max) return r.min;
  return nlohmann::json::array({r.min, r.max});
}

CountRange count_range_from_json(const nlohmann::json& j) {
  if (j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0))
    return CountRange::fixed(j.get<std::size_t>());
  if (j.is_array() && j.size() == 2) {
    CountRange r{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
    if (r.max < r.min) throw ConfigError("count range [min, max] has max < min");
    return r;
  }
  throw ConfigError("count must be a non-negative integer or [min, max]");
}

const char* to_string(SelectionKind k) {
  switch (k) {
    case SelectionKind::rss: return "rss";
    case SelectionKind::pass: return "pass";
    case SelectionKind::pess: return "pess";
    case SelectionKind::ppss: return "ppss";
  }
  return "?";
}

SelectionKind selection_kind_from_string(const std::string& s) {
  if (s == "rss") return SelectionKind::rss;
  if (s == "pass") return SelectionKind::pass;
  if (s == "pess") return SelectionKind::pess;
  if (s == "ppss") return SelectionKind::ppss;
  throw ConfigError("unknown selection policy '" + s + "'");
}

nlohmann::json to_json(const SelectionPolicy& p) {
  return {{"kind", to_string(p.kind)},
          {"k", to_json(p.k)},
          {"sample_without_replacement", p.sample_without_replacement},
          {"member_mode", p.member_mode == MemberMode::probabilistic ? "probabilistic" : "deterministic_max"},
          {"direction", p.direction == CardinalityDirection::proportional ? "proportional" : "inverse"},
          {"member_replacement", p.member_replacement},
          {"m", to_json(p.m)},
          {"probe_holdout", p.probe_holdout}};
}

SelectionPolicy selection_policy_from_json(const nlohmann::json& j) {
  check_keys(j, {"kind", "k", "sample_without_replacement", "member_mode", "direction", "member_replacement", "m",
                 "probe_holdout"},
             "selection policy");
  SelectionPolicy p;
  p.kind = selection_kind_from_string(get_or<std::string>(j, "kind", "rss"));
  if (j.contains("k")) p.k = count_range_from_json(j["k"]);
  p.sample_without_replacement = get_or(j, "sample_without_replacement", p.sample_without_replacement);
  const auto mode = get_or<std::string>(j, "member_mode", "probabilistic");
  if (mode == "probabilistic") p.member_mode = MemberMode::probabilistic;
  else if (mode == "deterministic_max") p.member_mode = MemberMode::deterministic_max;
  else throw ConfigError("unknown member_mode '" + mode + "'");
  const auto dir = get_or<std::string>(j, "direction", "proportional");
  if (dir == "proportional") p.direction = CardinalityDirection::proportional;
  else if (dir == "inverse") p.direction = CardinalityDirection::inverse;
  else throw ConfigError("unknown direction '" + dir + "'");
  p.member_replacement = get_or(j, "member_replacement", p.member_replacement);
  if (j.contains("m")) p.m = count_range_from_json(j["m"]);
  p.probe_holdout = get_or(j, "probe_holdout", p.probe_holdout);
  if (p.k.min < 1) throw ConfigError("selection k must be >= 1");
  if (p.m.min < 1) throw ConfigError("selection m must be >= 1");
  if (p.m.max > p.k.max) throw ConfigError("selection m must not exceed k");
  if (!(p.probe_holdout > 0.0 && p.probe_holdout < 1.0)) throw ConfigError("probe_holdout must lie in (0, 1)");
  return p;
}

// ------------------------------------------------------------------ pools

std::vector<std::size_t> weighted_without_replacement(const std::vector<double>& weights, std::size_t k, Rng& rng) {
  if (k > weights.size()) throw std::invalid_argument("cannot draw more distinct items than exist");
  std::vector<double> w = weights;
  for (double& x : w)
    if (!(x > 0.0)) x = 0.0;
  std::vector<bool> taken(w.size(), false);
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t step = 0; step < k; ++step) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::size_t pick;
    if (total > 0.0) {
      pick = weighted_index(rng, w);
    } else {
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < taken.size(); ++i)
        if (!taken[i]) rest.push_back(i);
      pick = rest[uniform_index(rng, rest.size())];
    }
    taken[pick] = true;
    w[pick] = 0.0;
    out.push_back(pick);
  }
  return out;
}

SamplePool rss(std::size_t n, std::size_t k, std::uint64_t seed, bool without_replacement) {
  SamplePool pool;
  if (k == 0) return pool;
  Rng rng(seed);
  if (without_replacement) {
    if (k > n) throw std::invalid_argument("rss: k exceeds the training set size without replacement");
    // Partial Fisher-Yates.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
    pool.indices.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    if (n == 0) throw std::invalid_argument("rss: empty training set");
    for (std::size_t i = 0; i < k; ++i) pool.indices.push_back(uniform_index(rng, n));
  }
  return pool;
}

SamplePool rss(const Dataset& train, std::size_t k, std::uint64_t seed, bool without_replacement) {
  return rss(train.size(), k, seed, without_replacement);
}

std::map<int, double> pass_member_probabilities(const Dataset& train, CardinalityDirection direction) {
  std::map<int, double> p;
  double total = 0.0;
  for (const auto& [c, rows] : train.class_index()) {
    const double size = static_cast<double>(rows.size());
    p[c] = direction == CardinalityDirection::proportional ? size : 1.0 / size;
    total += p[c];
  }
  for (auto& [c, v] : p) v /= total;
  return p;
}

SamplePool pass_select(const Dataset& train, const SelectionPolicy& policy, std::uint64_t seed) {
  if (train.class_index().empty()) throw std::invalid_argument("pass_select: empty training set");
  Rng rng(seed);
  const std::size_t k = policy.k.draw(rng);
  std::vector<int> members;
  std::vector<double> probs;
  for (const auto& [c, p] : pass_member_probabilities(train, policy.direction)) {
    members.push_back(c);
    probs.push_back(p);
  }
  std::vector<bool> available(members.size(), true);
  SamplePool pool;
  while (pool.indices.size() < k) {
    std::size_t pick = members.size();
    if (policy.member_mode == MemberMode::deterministic_max) {
      std::size_t best_size = 0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        const auto size = train.class_index().at(members[i]).size();
        if (available[i] && size > best_size) {
          best_size = size;
          pick = i;
        }
      }
    } else {
      std::vector<double> w(probs.size(), 0.0);
      bool any = false;
      for (std::size_t i = 0; i < probs.size(); ++i)
        if (available[i]) {
          w[i] = probs[i];
          any = true;
        }
      if (any) pick = weighted_index(rng, w);
    }
    if (pick == members.size()) {
      pool.short_pool = true;
      log_warning("pass_select: members exhausted after " + std::to_string(pool.indices.size()) + " of " +
                  std::to_string(k) + " samples");
      break;
    }
    if (!policy.member_replacement) available[pick] = false;
    const auto& rows = train.class_index().at(members[pick]);
    const std::size_t m = std::min({policy.m.draw(rng), rows.size(), k - pool.indices.size()});
    pool.member_draws.push_back(members[pick]);
    for (std::size_t local : rss(rows.size(), m, rng(), true).indices) pool.indices.push_back(rows[local]);
  }
  return pool;
}

std::vector<double> pess_probabilities(const std::vector<double>& losses) {
  double total = 0.0;
  for (double l : losses) {
    if (l < 0.0 || !std::isfinite(l)) throw std::invalid_argument("losses must be finite and non-negative");
    total += l;
  }
  std::vector<double> p(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i)
    p[i] = total > 0.0 ? losses[i] / total : 1.0 / static_cast<double>(losses.size());
  return p;
}

SamplePool pess_select(const std::vector<double>& losses, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  SamplePool pool;
  pool.indices = weighted_without_replacement(pess_probabilities(losses), k, rng);
  return pool;
}

SamplePool pess_select(const Dataset& train, const Classifier& classifier, std::size_t k, std::uint64_t seed) {
  return pess_select(per_sample_loss(classifier, train), k, seed);
}

std::map<int, double> ppss_member_probabilities(const std::map<int, double>& class_auc, const std::set<int>& classes) {
  if (classes.empty()) throw std::invalid_argument("ppss: no classes");
  std::map<int, double> q;
  double total = 0.0;
  for (int c : classes) {
    auto it = class_auc.find(c);
    const double auc = it == class_auc.end() ? 0.5 : it->second;
    q[c] = std::max(0.0, 1.0 - auc);
    total += q[c];
  }
  for (auto& [c, v] : q) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(classes.size());
  return q;
}

SamplePool ppss_select(const Dataset& train, const std::map<int, double>& class_auc, std::size_t k,
                       std::uint64_t seed) {
  const auto q = ppss_member_probabilities(class_auc, train.classes_present());
  std::vector<int> members;
  std::vector<double> w;
  for (const auto& [c, p] : q) {
    members.push_back(c);
    w.push_back(p);
  }
  Rng rng(seed);
  SamplePool pool;
  for (std::size_t i = 0; i < k; ++i) {
    const int c = members[weighted_index(rng, w)];
    const auto& rows = train.class_index().at(c);
    pool.member_draws.push_back(c);
    pool.indices.push_back(rows[uniform_index(rng, rows.size())]);
  }
  return pool;
}

std::map<int, double> probe_class_auc(const Dataset& train, const Classifier& prototype, double holdout,
                                      std::uint64_t seed) {
  auto [fit_part, held] = split(train, holdout, seed);
  auto probe = prototype.clone();
  probe->fit(fit_part);
  const Matrix scores = probe->predict_scores(held);
  const auto y = held.targets();
  std::map<int, double> auc;
  for (int c : held.classes_present()) {
    std::vector<int> labels(y.size());
    std::vector<double> s(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      labels[i] = y[i] == c ? 1 : 0;
      s[i] = scores(static_cast<Eigen::Index>(i), c);
    }
    if (std::all_of(labels.begin(), labels.end(), [](int l) { return l == 1; })) continue;
    auc[c] = roc_auc(s, labels).auc;
  }
  return auc;
}

SamplePool select_samples(const Dataset& train, const SelectionPolicy& policy, const Classifier* classifier,
                          std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  switch (policy.kind) {
    case SelectionKind::rss:
      return rss(train, policy.k.draw(rng), derive_seed(seed, 1), policy.sample_without_replacement);
    case SelectionKind::pass: return pass_select(train, policy, derive_seed(seed, 1));
    case SelectionKind::pess: {
      if (!classifier) throw std::invalid_argument("pess needs a trained classifier");
      const std::size_t k = std::min(policy.k.draw(rng), train.size());
      return pess_select(train, *classifier, k, derive_seed(seed, 1));
    }
    case SelectionKind::ppss: {
      if (!classifier) throw std::invalid_argument("ppss needs a classifier prototype");
      const auto auc = probe_class_auc(train, *classifier, policy.probe_holdout, derive_seed(seed, 2));
      return ppss_select(train, auc, policy.k.draw(rng), derive_seed(seed, 1));
    }
  }
  return {};
}

// ------------------------------------------------------ feature weighting

const char* to_string(WeightingKind k) {
  switch (k) {
    case WeightingKind::random: return "random";
    case WeightingKind::imbalance: return "imbalance";
    case WeightingKind::gini_importance: return "gini_importance";
    case WeightingKind::permutation_importance: return "permutation_importance";
    case WeightingKind::drop_column_importance: return "drop_column_importance";
  }
  return "?";
}

WeightingKind weighting_kind_from_string(const std::string& s) {
  if (s == "random") return WeightingKind::random;
  if (s == "imbalance") return WeightingKind::imbalance;
  if (s == "gini_importance" || s == "gini") return WeightingKind::gini_importance;
  if (s == "permutation_importance" || s == "permutation") return WeightingKind::permutation_importance;
  if (s == "drop_column_importance" || s == "drop_column") return WeightingKind::drop_column_importance;
  throw ConfigError("unknown feature weighting '" + s + "'");
}

nlohmann::json FeatureWeighting::to_json() const {
  nlohmann::json w = nlohmann::json::object();
  for (std::size_t i = 0; i < names.size(); ++i) w[names[i]] = weights[i];
  return {{"kind", sedg::to_string(kind)}, {"weights", w}, {"uniform_fallback", uniform_fallback}};
}

FeatureWeighting make_weighting(WeightingKind kind, const Schema& schema, std::vector<double> raw) {
  if (raw.size() != schema.size()) throw std::invalid_argument("weighting size does not match the schema");
  FeatureWeighting fw;
  fw.kind = kind;
  for (const auto& f : schema.features) fw.names.push_back(f.name);
  fw.weights.resize(raw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    fw.weights[i] = std::isfinite(raw[i]) ? std::max(0.0, raw[i]) : 0.0;
    total += fw.weights[i];
  }
  if (total > 0.0) {
    for (double& w : fw.weights) w /= total;
  } else {
    fw.uniform_fallback = true;
    for (double& w : fw.weights) w = 1.0 / static_cast<double>(raw.size());
  }
  fw.raw = std::move(raw);
  return fw;
}

FeatureWeighting random_weights(const Schema& schema) {
  return make_weighting(WeightingKind::random, schema, std::vector<double>(schema.size(), 1.0));
}

std::pair<double, double> two_means_1d(const std::vector<double>& values, std::size_t max_iter) {
  if (values.empty()) throw std::invalid_argument("two_means_1d: no values");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double a = *lo, b = *hi;
  for (std::size_t it = 0; it < max_iter; ++it) {
    double sa = 0.0, sb = 0.0;
    std::size_t na = 0, nb = 0;
    for (double v : values) {
      if (std::abs(v - a) <= std::abs(v - b)) {
        sa += v;
        ++na;
      } else {
        sb += v;
        ++nb;
      }
    }
    const double a2 = na ? sa / static_cast<double>(na) : a;
    const double b2 = nb ? sb / static_cast<double>(nb) : b;
    if (a2 == a && b2 == b) break;
    a = a2;
    b = b2;
  }
  return {a, b};
}

double imbalance_ratio(const std::vector<double>& counts) {
  if (counts.size() < 2) return 0.0;
  const double mx = *std::max_element(counts.begin(), counts.end());
  if (mx <= 0.0) return 0.0;
  auto [a, b] = two_means_1d(counts);
  return std::abs(a - b) / mx;
}

FeatureWeighting imbalance_weights(const Dataset& train) {
  if (train.empty()) throw std::invalid_argument("imbalance_weights: empty dataset");
  std::vector<double> r;
  for (std::size_t f = 0; f < train.num_features(); ++f) {
    std::map<double, double> counts;
    for (const auto& s : train.samples()) counts[s.features[f]] += 1.0;
    std::vector<double> c;
    for (const auto& [v, n] : counts) c.push_back(n);
    r.push_back(imbalance_ratio(c));
  }
  return make_weighting(WeightingKind::imbalance, train.schema(), std::move(r));
}

FeatureWeighting permutation_importance(const Classifier& model, const Dataset& test, std::size_t repeats,
                                        std::uint64_t seed) {
  if (test.empty()) throw std::invalid_argument("permutation_importance: empty test set");
  if (repeats < 1) throw std::invalid_argument("permutation_importance: repeats must be >= 1");
  const auto y = test.targets();
  const double base = accuracy(y, model.predict(test));
  std::vector<double> raw(test.num_features(), 0.0);
  for (std::size_t f = 0; f < test.num_features(); ++f) {
    double total = 0.0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      Rng rng(derive_seed(seed, f * 1000003 + rep));
      std::vector<double> column;
      for (const auto& s : test.samples()) column.push_back(s.features[f]);
      shuffle_in_place(column, rng);
      std::vector<Sample> samples = test.samples();
      for (std::size_t i = 0; i < samples.size(); ++i) samples[i].features[f] = column[i];
      total += accuracy(y, model.predict(test.with_samples(std::move(samples))));
    }
    raw[f] = base - total / static_cast<double>(repeats);
  }
  return make_weighting(WeightingKind::permutation_importance, test.schema(), std::move(raw));
}

Dataset neutralize_feature(const Dataset& d, std::size_t f) {
  const auto& spec = d.schema()[f];
  const double constant = spec.is_discrete() ? 0.0 : spec.min;
  std::vector<Sample> samples = d.samples();
  for (auto& s : samples) s.features[f] = constant;
  return d.with_samples(std::move(samples));
}

FeatureWeighting drop_column_importance(const Classifier& prototype, const Dataset& train, const Dataset& test) {
  if (test.empty()) throw std::invalid_argument("drop_column_importance: empty test set");
  const auto y = test.targets();
  auto base_model = prototype.clone();
  base_model->fit(train);
  const double base = accuracy(y, base_model->predict(test));
  std::vector<double> raw(train.num_features(), 0.0);
  for (std::size_t f = 0; f < train.num_features(); ++f) {
    auto m = prototype.clone();
    m->fit(neutralize_feature(train, f));
    raw[f] = base - accuracy(y, m->predict(neutralize_feature(test, f)));
  }
  return make_weighting(WeightingKind::drop_column_importance, train.schema(), std::move(raw));
}

FeatureWeighting gini_importance(const Classifier& model, const Schema& schema) {
  const auto* fc = dynamic_cast<const FeaturizedClassifier*>(&model);
  const auto* tree = fc ? dynamic_cast<const TreeModel*>(&fc->model()) : nullptr;
  if (!tree || fc->featurizer() != Featurizer::encoded)
    throw UnsupportedError("gini importance needs a tree-based classifier on raw features, got '" + model.name() +
                           "'");
  return make_weighting(WeightingKind::gini_importance, schema, tree->impurity_importance(schema.size()));
}

std::vector<std::size_t> select_features(const std::vector<double>& weights, std::size_t count, Rng& rng) {
  if (count > weights.size()) throw std::invalid_argument("select_features: count exceeds the feature count");
  return weighted_without_replacement(weights, count, rng);
}

std::vector<std::size_t> select_features(const FeatureWeighting& w, const CountRange& count, Rng& rng) {
  return select_features(w.weights, std::min(count.draw(rng), w.weights.size()), rng);
}

}  // namespace sedg
