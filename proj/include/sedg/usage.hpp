#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/classifiers.hpp"
#include "sedg/metrics.hpp"
#include "sedg/modification.hpp"

namespace sedg {

enum class StartMode { cold, warm };
enum class Retention { replace_all, replace_fraction, append };

struct UsagePolicy {
  StartMode start = StartMode::cold;
  bool iterative = false;
  std::size_t iterations = 3;
  Retention retention = Retention::replace_all;
  /// Share of the previous synthetic set dropped under replace_fraction.
  double replace_fraction = 0.5;
  /// Largest synthetic set append retention may accumulate.
  std::size_t memory_cap = 100000;

  std::size_t rounds() const { return iterative ? iterations : 1; }
};

nlohmann::json to_json(const UsagePolicy& p);
UsagePolicy usage_policy_from_json(const nlohmann::json& j);

/// Raised when append retention would exceed the memory cap.
class MemoryCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UsageIteration {
  std::size_t iteration = 0;
  std::size_t train_size = 0;
  std::size_t synthetic_size = 0;
  std::optional<MetricReport> metrics;
};

nlohmann::json to_json(const UsageIteration& it);

struct UsageResult {
  std::unique_ptr<Classifier> classifier;
  Dataset final_train;
  /// Synthetic rows contained in final_train, with their source indices.
  Dataset synthetic;
  std::vector<std::size_t> synthetic_source;
  std::vector<UsageIteration> log;
};

/// Produces the synthetic batch of iteration t (1-based). `current` is the
/// most recently trained classifier (the initial model before the first round).
using BatchGenerator = std::function<GeneratedBatch(std::size_t t, const Classifier* current, std::uint64_t seed)>;

/// Runs the retention/start policy. Every round trains on the original
/// training set plus the retained synthetic rows. Cold start fits a fresh
/// clone of `prototype`; warm start continues from the previous model
/// (the first round continues from `initial` when it is given). Metrics are
/// logged on `test` when it is non-null.
UsageResult run_usage_cycle(const Dataset& train, const Dataset* test, const BatchGenerator& generate,
                            const UsagePolicy& policy, const Classifier& prototype, const Classifier* initial,
                            std::uint64_t seed);

/// Class scores evaluated against `test`, excluding classes absent from `train`.
MetricReport evaluate(const Classifier& c, const Dataset& test, const std::set<int>& exclude = {});

}  // namespace sedg
