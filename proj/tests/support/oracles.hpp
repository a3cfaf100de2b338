#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "sedg/data.hpp"

namespace oracle {

/// Mann-Whitney AUC by explicit pair enumeration; ties count one half.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Regularised upper incomplete gamma Q(a, x) (series / continued fraction).
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q domain");
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, del = 1.0 / a, sum = del;
    for (int n = 0; n < 1000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit of observed counts against expected probabilities.
/// Cells with zero expected probability must have zero counts.
inline ChiSquare chi_square(const std::vector<double>& observed, const std::vector<double>& probs) {
  double n = 0.0, total_p = 0.0;
  for (double o : observed) n += o;
  for (double p : probs) total_p += p;
  ChiSquare r;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = n * probs[i] / total_p;
    if (e == 0.0) {
      if (observed[i] != 0.0) {
        r.p_value = 0.0;
        r.statistic = std::numeric_limits<double>::infinity();
        return r;
      }
      continue;
    }
    r.statistic += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  r.dof = cells > 0 ? cells - 1 : 0;
  r.p_value = r.dof == 0 ? 1.0 : gamma_q(0.5 * static_cast<double>(r.dof), 0.5 * r.statistic);
  return r;
}

/// Small mixed schema: three discrete features and two continuous ones.
inline sedg::Schema toy_schema(int classes = 3) {
  sedg::Schema s;
  s.features.push_back(sedg::FeatureSpec::discrete("colour", {"blue", "green", "red"}));
  s.features.push_back(sedg::FeatureSpec::discrete("size", {"1", "2", "3", "4"}));
  s.features.push_back(sedg::FeatureSpec::discrete("flag", {"no", "yes"}));
  s.features.push_back(sedg::FeatureSpec::continuous("x", 0, 10, 0.5));
  s.features.push_back(sedg::FeatureSpec::continuous("y", -5, 5, 1));
  s.target = sedg::TargetSpec{"label", 0, classes - 1};
  return s;
}

/// Rows whose label depends on colour and x, with class sizes `sizes`.
inline sedg::Dataset toy_dataset(const std::vector<std::size_t>& sizes, std::uint64_t seed = 1) {
  const auto schema = toy_schema(static_cast<int>(sizes.size()));
  sedg::Rng rng(seed);
  std::vector<sedg::Sample> rows;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      sedg::Sample s;
      s.target = static_cast<int>(c);
      const double u = sedg::uniform01(rng);
      s.features = {static_cast<double>((c + (u < 0.2 ? 1 : 0)) % 3),
                    static_cast<double>(sedg::uniform_index(rng, 4)),
                    static_cast<double>(sedg::uniform_index(rng, 2)),
                    schema[3].snap(2.0 * static_cast<double>(c) + 3.0 * sedg::uniform01(rng)),
                    schema[4].snap(-5.0 + 10.0 * sedg::uniform01(rng))};
      rows.push_back(std::move(s));
    }
  return sedg::Dataset(schema, std::move(rows));
}

}  // namespace oracle
