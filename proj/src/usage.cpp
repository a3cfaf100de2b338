#include "sedg/usage.hpp"

#include <cmath>
#include <numeric>

#include "sedg/config.hpp"

namespace sedg {

namespace {

const char* retention_name(Retention r) {
  switch (r) {
    case Retention::replace_all: return "replace_all";
    case Retention::replace_fraction: return "replace_fraction";
    case Retention::append: return "append";
  }
  return "?";
}

}  // namespace

nlohmann::json to_json(const UsagePolicy& p) {
  return {{"start", p.start == StartMode::cold ? "cold" : "warm"},
          {"iterative", p.iterative},
          {"iterations", p.iterations},
          {"retention", retention_name(p.retention)},
          {"replace_fraction", p.replace_fraction},
          {"memory_cap", p.memory_cap}};
}

UsagePolicy usage_policy_from_json(const nlohmann::json& j) {
  check_keys(j, {"start", "iterative", "iterations", "retention", "replace_fraction", "memory_cap"}, "usage policy");
  UsagePolicy p;
  const auto start = get_or<std::string>(j, "start", "cold");
  if (start == "cold") p.start = StartMode::cold;
  else if (start == "warm") p.start = StartMode::warm;
  else throw ConfigError("unknown start mode '" + start + "'");
  p.iterative = get_or(j, "iterative", p.iterative);
  p.iterations = get_or(j, "iterations", p.iterations);
  const auto ret = get_or<std::string>(j, "retention", "replace_all");
  if (ret == "replace_all") p.retention = Retention::replace_all;
  else if (ret == "replace_fraction") p.retention = Retention::replace_fraction;
  else if (ret == "append") p.retention = Retention::append;
  else throw ConfigError("unknown retention '" + ret + "'");
  p.replace_fraction = get_or(j, "replace_fraction", p.replace_fraction);
  p.memory_cap = get_or(j, "memory_cap", p.memory_cap);
  if (p.iterative && p.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (p.replace_fraction < 0.0 || p.replace_fraction > 1.0) throw ConfigError("replace_fraction must lie in [0, 1]");
  return p;
}

nlohmann::json to_json(const UsageIteration& it) {
  nlohmann::json j{{"iteration", it.iteration}, {"train_size", it.train_size}, {"synthetic_size", it.synthetic_size}};
  if (it.metrics) j["metrics"] = to_json(*it.metrics);
  return j;
}

MetricReport evaluate(const Classifier& c, const Dataset& test, const std::set<int>& exclude) {
  return multiclass_auc(c.predict_scores(test), test.targets(), exclude);
}

UsageResult run_usage_cycle(const Dataset& train, const Dataset* test, const BatchGenerator& generate,
                            const UsagePolicy& policy, const Classifier& prototype, const Classifier* initial,
                            std::uint64_t seed) {
  if (policy.iterative && policy.iterations < 1) throw ConfigError("iterations must be >= 1");
  UsageResult result;
  std::vector<Sample> synthetic;
  std::vector<std::size_t> source;
  std::set<int> exclude;
  if (test)
    for (int c : test->classes_present())
      if (!train.classes_present().count(c)) exclude.insert(c);

  std::unique_ptr<Classifier> current;
  for (std::size_t t = 1; t <= policy.rounds(); ++t) {
    const Classifier* model_now = current ? current.get() : initial;
    GeneratedBatch batch = generate(t, model_now, derive_seed(seed, 2 * t));

    switch (policy.retention) {
      case Retention::replace_all:
        synthetic.clear();
        source.clear();
        break;
      case Retention::replace_fraction: {
        const auto drop = static_cast<std::size_t>(std::llround(policy.replace_fraction * static_cast<double>(synthetic.size())));
        std::vector<std::size_t> order(synthetic.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(seed, 2 * t + 1));
        shuffle_in_place(order, rng);
        std::vector<bool> keep(synthetic.size(), true);
        for (std::size_t i = 0; i < drop; ++i) keep[order[i]] = false;
        std::vector<Sample> kept;
        std::vector<std::size_t> kept_src;
        for (std::size_t i = 0; i < synthetic.size(); ++i)
          if (keep[i]) {
            kept.push_back(synthetic[i]);
            kept_src.push_back(source[i]);
          }
        synthetic = std::move(kept);
        source = std::move(kept_src);
        break;
      }
      case Retention::append:
        if (synthetic.size() + batch.samples.size() > policy.memory_cap)
          throw MemoryCapExceeded("append retention would hold " +
                                  std::to_string(synthetic.size() + batch.samples.size()) +
                                  " synthetic rows, above the memory cap of " + std::to_string(policy.memory_cap) +
                                  "; appending every batch is memory intensive");
        break;
    }
    for (std::size_t i = 0; i < batch.samples.size(); ++i) {
      synthetic.push_back(batch.samples[i]);
      source.push_back(batch.source_index.at(i));
    }

    Dataset augmented = train.concat(train.with_samples(synthetic));
    if (policy.start == StartMode::cold) {
      current = prototype.clone();
      current->fit(augmented);
    } else {
      if (!current) current = initial ? initial->clone() : prototype.clone();
      const bool continue_from = initial != nullptr || t > 1;
      if (continue_from && current->supports_warm_start()) current->fit_more(augmented);
      else current->fit(augmented);
    }

    UsageIteration it;
    it.iteration = t;
    it.train_size = augmented.size();
    it.synthetic_size = synthetic.size();
    if (test) it.metrics = evaluate(*current, *test, exclude);
    result.log.push_back(std::move(it));
    result.final_train = std::move(augmented);
  }
  result.classifier = std::move(current);
  result.synthetic = train.with_samples(synthetic);
  result.synthetic_source = std::move(source);
  return result;
}

}  // namespace sedg
