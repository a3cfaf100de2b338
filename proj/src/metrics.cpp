#include "sedg/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sedg {

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("confusion: length mismatch");
  if (y_true.empty()) throw std::invalid_argument("confusion: empty input");
  ConfusionMatrix cm;
  cm.total = y_true.size();
  std::set<int> classes(y_true.begin(), y_true.end());
  classes.insert(y_pred.begin(), y_pred.end());
  for (int c : classes) {
    BinaryCounts& b = cm.per_class[c];
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      bool actual = y_true[i] == c;
      bool predicted = y_pred[i] == c;
      if (actual && predicted) ++b.tp;
      else if (!actual && predicted) ++b.fp;
      else if (actual) ++b.fn;
      else ++b.tn;
    }
  }
  return cm;
}

Rates tpr_fpr(const BinaryCounts& c) {
  Rates r;
  if (c.tp + c.fn > 0) r.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.fp + c.tn > 0) r.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  return r;
}

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
  std::size_t pos = 0;
  for (int l : labels) pos += l != 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc: AUC undefined for single-class labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult out;
  out.curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double area = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] != 0) ++tp;
      else ++fp;
      ++i;
    }
    // Exact endpoint so the last point is (1, 1) without rounding drift.
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    area += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    out.curve.points.push_back({fpr, tpr});
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  out.auc = area;
  return out;
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (y_true.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hit += y_true[i] == y_pred[i];
  return static_cast<double>(hit) / static_cast<double>(y_true.size());
}

MetricReport multiclass_auc(const Matrix& scores, std::span<const int> y_true,
                            const std::set<int>& exclude) {
  if (static_cast<std::size_t>(scores.rows()) != y_true.size())
    throw std::invalid_argument("multiclass_auc: score rows do not match labels");
  MetricReport report;
  std::vector<int> pred = argmax_rows(scores);
  report.accuracy = accuracy(y_true, pred);

  std::set<int> present(y_true.begin(), y_true.end());
  std::vector<int> evaluated;
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const int cls = static_cast<int>(c);
    const bool usable = present.count(cls) && !exclude.count(cls) && present.size() > 1;
    if (!usable) {
      report.excluded_classes.push_back(cls);
      continue;
    }
    evaluated.push_back(cls);
  }
  const std::size_t n = y_true.size();
  std::vector<double> col(n);
  std::vector<int> lab(n);
  double macro = 0.0;
  for (int cls : evaluated) {
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = scores(static_cast<Eigen::Index>(i), cls);
      lab[i] = y_true[i] == cls;
    }
    double auc = roc_auc(col, lab).auc;
    report.class_auc[cls] = auc;
    macro += auc;
  }
  if (!evaluated.empty()) {
    report.macro_auc = macro / static_cast<double>(evaluated.size());
    std::vector<double> flat;
    std::vector<int> flat_lab;
    flat.reserve(n * evaluated.size());
    flat_lab.reserve(n * evaluated.size());
    for (std::size_t i = 0; i < n; ++i) {
      for (int cls : evaluated) {
        flat.push_back(scores(static_cast<Eigen::Index>(i), cls));
        flat_lab.push_back(y_true[i] == cls);
      }
    }
    report.micro_auc = roc_auc(flat, flat_lab).auc;
  }
  return report;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [c, v] : r.class_auc) classes[std::to_string(c)] = v;
  return {{"accuracy", r.accuracy},
          {"macro_auc", r.macro_auc},
          {"micro_auc", r.micro_auc},
          {"class_auc", classes},
          {"excluded_classes", r.excluded_classes}};
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.macro_auc = j.at("macro_auc").get<double>();
  r.micro_auc = j.at("micro_auc").get<double>();
  for (const auto& [k, v] : j.at("class_auc").items()) r.class_auc[std::stoi(k)] = v.get<double>();
  if (j.contains("excluded_classes")) r.excluded_classes = j["excluded_classes"].get<std::vector<int>>();
  return r;
}

}  // namespace sedg
