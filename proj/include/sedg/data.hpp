#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sedg/common.hpp"

namespace sedg {

enum class FeatureKind { discrete, continuous };

const char* to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& text);

/// Typed domain of one predictor column.
///
/// Discrete features hold their permitted codes in `values`, kept in natural
/// sort order (numeric when every code parses as a number). A sample stores
/// the index into `values`. Continuous features hold `min`, `max` and the
/// grid `step`; a sample stores the raw value.
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::discrete;
  std::vector<std::string> values;
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;
  /// Optional tag used to toggle groups of columns, e.g. "period_grade".
  std::string group;

  static FeatureSpec discrete(std::string name, std::vector<std::string> values,
                              std::string group = {});
  static FeatureSpec continuous(std::string name, double min, double max, double step,
                                std::string group = {});

  bool is_discrete() const { return kind == FeatureKind::discrete; }
  std::size_t cardinality() const { return values.size(); }

  /// Throws SchemaError when the domain violates its invariants.
  void validate() const;
  bool admits(double value) const;
  /// Index of `text` in `values`; throws SchemaError if absent.
  std::size_t code_of(const std::string& text) const;
  /// Nearest representable value on the step lattice within [min, max].
  double snap(double value) const;
};

struct TargetSpec {
  std::string name = "G3";
  int min_class = 0;
  int max_class = 20;
  int num_classes() const { return max_class - min_class + 1; }
};

/// Ordered list of feature specs plus the target description.
struct Schema {
  std::vector<FeatureSpec> features;
  TargetSpec target;

  std::size_t size() const { return features.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return features[i]; }
  int num_classes() const { return target.num_classes(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
  void validate() const;
  /// Copy without the features whose group is listed in `groups`.
  Schema without_groups(const std::set<std::string>& groups) const;
};

/// Parses the key/value schema format:
///   feature name=<n> kind=discrete values=a,b,c [group=<g>]
///   feature name=<n> kind=continuous min=<x> max=<y> step=<s> [group=<g>]
///   target name=<n> min=<a> max=<b>
/// Blank lines and lines starting with '#' are ignored.
Schema parse_schema(const std::string& text);
Schema load_schema(const std::filesystem::path& path);
std::string format_schema(const Schema& schema);

/// Schema of the UCI student-performance table (Portuguese course file).
/// With `include_period_grades` the first and second period grades G1/G2 are
/// predictors, giving 32 features; without them there are 30.
Schema student_schema(bool include_period_grades = true);

struct Sample {
  std::vector<double> features;
  int target = 0;
  bool synthetic = false;
};

/// Immutable table of samples with a class partition.
class Dataset {
 public:
  Dataset() = default;
  /// Validates every sample against `schema`; throws RowError on the first offender.
  Dataset(Schema schema, std::vector<Sample> samples);

  const Schema& schema() const { return schema_; }
  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t num_features() const { return schema_.size(); }
  int num_classes() const { return schema_.num_classes(); }

  /// class label -> sample indices, each index in exactly one member.
  const std::map<int, std::vector<std::size_t>>& class_index() const { return class_index_; }
  std::vector<int> targets() const;
  std::set<int> classes_present() const;

  Dataset subset(const std::vector<std::size_t>& indices) const;
  /// Concatenation; schemas must match.
  Dataset concat(const Dataset& other) const;
  Dataset with_samples(std::vector<Sample> samples) const;

  /// Checks one sample against the schema; returns a message or empty string.
  static std::string check_sample(const Schema& schema, const Sample& sample);

 private:
  Schema schema_;
  std::vector<Sample> samples_;
  std::map<int, std::vector<std::size_t>> class_index_;
};

/// Reads a semicolon-delimited CSV with a header row. Quoted fields are
/// unquoted; columns not in the schema are ignored.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);
Dataset parse_csv(const std::string& text, const Schema& schema);

/// Writes the same dialect. When `source_index` is given, a `source_index`
/// column and a `synthetic` column are appended.
std::string format_csv(const Dataset& d, const std::vector<std::size_t>* source_index = nullptr);
void write_csv(const std::filesystem::path& path, const Dataset& d,
               const std::vector<std::size_t>* source_index = nullptr);

/// Stratified split. Per class, round(test_fraction * |class|) rows go to
/// test, except singleton classes which stay in train; the total is then
/// adjusted to round(test_fraction * |d|) by moving rows from or to the
/// classes with the largest rounding residue.
std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction, std::uint64_t seed);

std::map<int, std::size_t> class_distribution(const Dataset& d);

/// Numeric view of samples: discrete codes stay integer, continuous values
/// are min-max scaled to [0, 1] using the schema bounds.
class Encoder {
 public:
  explicit Encoder(Schema schema);

  const Schema& schema() const { return schema_; }
  Matrix encode(const Dataset& d) const;
  RowVector encode_sample(const Sample& s) const;
  /// Inverse of encode_sample; rounds discrete codes and snaps continuous values.
  Sample decode_row(const Eigen::Ref<const RowVector>& row, int target) const;
  double encode_value(std::size_t feature, double value) const;
  double decode_value(std::size_t feature, double encoded) const;

  /// Width of the one-hot layout: sum of cardinalities plus one column per continuous feature.
  std::size_t one_hot_width() const { return one_hot_width_; }
  /// Column offset of feature `f` in the one-hot layout.
  std::size_t one_hot_offset(std::size_t f) const { return offsets_[f]; }
  Matrix one_hot(const Dataset& d) const;

 private:
  Schema schema_;
  std::vector<std::size_t> offsets_;
  std::size_t one_hot_width_ = 0;
};

}  // namespace sedg
