// Writes a deterministic 649-row table in the student-performance CSV layout.
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include "sedg/data.hpp"

using namespace sedg;

namespace {

// Final-grade histogram of the Portuguese-course file.
const std::map<int, int> kGradeCounts{{0, 15},  {1, 1},   {5, 1},   {6, 3},   {7, 10},  {8, 35},
                                      {9, 35},  {10, 97}, {11, 104}, {12, 72}, {13, 82}, {14, 63},
                                      {15, 49}, {16, 36}, {17, 29}, {18, 15}, {19, 2}};

double clamp_code(double v, std::size_t card) {
  return std::clamp(std::round(v), 0.0, static_cast<double>(card - 1));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2 && argc != 3) {
    std::cerr << "usage: make_standin <out.csv> [out.schema]\n";
    return 1;
  }
  const Schema schema = student_schema(true);
  Rng rng(649);
  std::vector<int> grades;
  for (const auto& [g, n] : kGradeCounts) grades.insert(grades.end(), static_cast<std::size_t>(n), g);
  shuffle_in_place(grades, rng);

  auto code = [&](const char* name) { return *schema.index_of(name); };
  std::vector<Sample> rows;
  for (int g3 : grades) {
    Sample s;
    s.target = g3;
    s.features.assign(schema.size(), 0.0);
    const double z = (g3 - 11.9) / 3.2;
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const auto& spec = schema[f];
      if (spec.is_discrete()) s.features[f] = static_cast<double>(uniform_index(rng, spec.cardinality()));
    }
    s.features[code("school")] = uniform01(rng) < 0.35 - 0.08 * z ? 1 : 0;
    s.features[code("sex")] = uniform01(rng) < 0.41 ? 1 : 0;
    s.features[code("address")] = uniform01(rng) < 0.70 + 0.05 * z ? 1 : 0;
    s.features[code("Pstatus")] = uniform01(rng) < 0.88 ? 1 : 0;
    s.features[code("Medu")] = clamp_code(2.5 + 0.4 * z + standard_normal(rng), 5);
    s.features[code("Fedu")] = clamp_code(2.3 + 0.3 * z + standard_normal(rng), 5);
    s.features[code("studytime")] = clamp_code(0.9 + 0.35 * z + 0.8 * standard_normal(rng), 4);
    s.features[code("failures")] = clamp_code(-0.2 - 0.6 * z + 0.5 * standard_normal(rng), 4);
    s.features[code("higher")] = uniform01(rng) < 0.89 + 0.06 * z ? 1 : 0;
    s.features[code("Dalc")] = clamp_code(0.5 - 0.3 * z + 0.9 * standard_normal(rng), 5);
    s.features[code("Walc")] = clamp_code(1.3 - 0.3 * z + 1.2 * standard_normal(rng), 5);
    s.features[code("age")] = std::clamp(std::round(16.7 - 0.3 * z + 1.2 * standard_normal(rng)), 15.0, 22.0);
    s.features[code("absences")] =
        std::clamp(std::round(std::exp(1.2 - 0.2 * z + 0.9 * standard_normal(rng)) - 1.0), 0.0, 93.0);
    const double base = g3 == 0 ? 7.0 + 2.0 * standard_normal(rng) : g3;
    s.features[code("G1")] = std::clamp(std::round(base - 0.6 + 1.3 * standard_normal(rng)), 0.0, 20.0);
    s.features[code("G2")] =
        g3 == 0 && uniform01(rng) < 0.5 ? 0.0 : std::clamp(std::round(base - 0.2 + 0.9 * standard_normal(rng)), 0.0, 20.0);
    rows.push_back(std::move(s));
  }
  write_csv(argv[1], Dataset(schema, std::move(rows)));
  if (argc == 3) {
    std::ofstream out(argv[2]);
    out << format_schema(schema);
  }
  return 0;
}
