#pragma once

#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/common.hpp"

namespace sedg {

/// One-vs-rest 2x2 table for a single class.
struct BinaryCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const { return tp + fp + fn + tn; }
};

struct ConfusionMatrix {
  /// Per class seen in either list.
  std::map<int, BinaryCounts> per_class;
  std::size_t total = 0;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct Rates {
  double tpr = 0.0;
  double fpr = 0.0;
};

/// 0/0 denominators yield 0.
Rates tpr_fpr(const BinaryCounts& counts);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
};

/// Threshold sweep over distinct scores in descending order; tied scores
/// form one step so the trapezoid gives ties half credit.
/// Throws std::invalid_argument when labels contain only one class.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

struct MetricReport {
  double accuracy = 0.0;
  double macro_auc = 0.0;
  double micro_auc = 0.0;
  std::map<int, double> class_auc;
  /// Classes in the score matrix that were not evaluated (absent from y_true or excluded).
  std::vector<int> excluded_classes;
};

/// One-vs-rest AUC per class present in y_true (and not in `exclude`),
/// unweighted macro mean, and micro AUC over the flattened indicator set
/// of the evaluated columns. Accuracy uses row argmax, lowest index on ties.
MetricReport multiclass_auc(const Matrix& scores, std::span<const int> y_true,
                            const std::set<int>& exclude = {});

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Row argmax with ties resolved to the lowest column.
std::vector<int> argmax_rows(const Matrix& scores);

/// Treated-minus-baseline metric difference.
inline double percent_improvement(double m_syn, double m_orig) { return m_syn - m_orig; }

nlohmann::json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);

}  // namespace sedg
