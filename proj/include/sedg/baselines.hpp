#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/data.hpp"

namespace sedg {

enum class ResampleKind { random_over, random_under_majority, smote, tomek, enn, smote_tomek, smote_enn };

const char* to_string(ResampleKind k);
ResampleKind resample_kind_from_string(const std::string& s);

struct ResampleMethod {
  ResampleKind kind = ResampleKind::random_over;
  std::size_t smote_k = 5;
  std::size_t enn_k = 3;
};

nlohmann::json to_json(const ResampleMethod& m);
ResampleMethod resample_method_from_json(const nlohmann::json& j);

/// One SMOTE draw: the interpolated point before discrete snapping.
struct SmoteDraw {
  std::size_t source = 0;
  std::size_t neighbor = 0;
  double u = 0.0;
  RowVector point;
};

struct ResampleTrace {
  std::vector<SmoteDraw> smote;
  std::vector<std::size_t> removed;
};

/// Size of the median class among present classes, rounded up.
std::size_t median_class_size(const std::map<int, std::size_t>& sizes);

/// Applies a resampling baseline. Added samples are flagged synthetic and
/// appended after the originals.
Dataset resample(const Dataset& train, const ResampleMethod& method, std::uint64_t seed,
                 ResampleTrace* trace = nullptr);

/// Indices of the k nearest rows of x to row i (excluding i), Euclidean,
/// restricted to `pool`; ties go to the lower index.
std::vector<std::size_t> nearest_rows(const Matrix& x, std::size_t i, const std::vector<std::size_t>& pool,
                                      std::size_t k);

/// Pairs (i, j), i < j, that are mutual nearest neighbours with different labels.
std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const Dataset& d);

}  // namespace sedg
