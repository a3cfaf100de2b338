#include "sedg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sedg {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

// Splits one CSV line on ';', honouring double quotes ("" escapes a quote).
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ';') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string format_number(double v) {
  if (std::abs(v - std::round(v)) < 1e-12) return std::to_string(static_cast<long long>(std::round(v)));
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void natural_sort(std::vector<std::string>& values) {
  bool numeric = std::all_of(values.begin(), values.end(),
                             [](const std::string& v) { return parse_number(v).has_value(); });
  if (numeric) {
    std::sort(values.begin(), values.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  } else {
    std::sort(values.begin(), values.end());
  }
}

}  // namespace

const char* to_string(FeatureKind kind) {
  return kind == FeatureKind::discrete ? "discrete" : "continuous";
}

FeatureKind feature_kind_from_string(const std::string& text) {
  if (text == "discrete") return FeatureKind::discrete;
  if (text == "continuous") return FeatureKind::continuous;
  throw SchemaError("unknown feature kind '" + text + "'");
}

FeatureSpec FeatureSpec::discrete(std::string name, std::vector<std::string> values,
                                  std::string group) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::discrete;
  natural_sort(values);
  f.values = std::move(values);
  f.group = std::move(group);
  return f;
}

FeatureSpec FeatureSpec::continuous(std::string name, double min, double max, double step,
                                    std::string group) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::continuous;
  f.min = min;
  f.max = max;
  f.step = step;
  f.group = std::move(group);
  return f;
}

void FeatureSpec::validate() const {
  if (name.empty()) throw SchemaError("feature with empty name");
  if (is_discrete()) {
    if (values.empty()) throw SchemaError("feature '" + name + "' has an empty value set");
    std::set<std::string> seen(values.begin(), values.end());
    if (seen.size() != values.size())
      throw SchemaError("feature '" + name + "' has duplicate values");
  } else {
    if (!(min < max)) throw SchemaError("feature '" + name + "' requires min < max");
    if (!(step > 0.0)) throw SchemaError("feature '" + name + "' requires step > 0");
  }
}

bool FeatureSpec::admits(double value) const {
  if (!std::isfinite(value)) return false;
  if (is_discrete()) {
    return value >= 0.0 && value < static_cast<double>(values.size()) &&
           value == std::floor(value);
  }
  if (value < min - 1e-9 || value > max + 1e-9) return false;
  double k = (value - min) / step;
  return std::abs(k - std::round(k)) < 1e-6;
}

std::size_t FeatureSpec::code_of(const std::string& text) const {
  auto it = std::find(values.begin(), values.end(), text);
  if (it == values.end()) {
    // Numeric codes may be written differently ("01" vs "1").
    if (auto v = parse_number(text)) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        auto w = parse_number(values[i]);
        if (w && *w == *v) return i;
      }
    }
    throw SchemaError("value '" + text + "' not in domain of feature '" + name + "'");
  }
  return static_cast<std::size_t>(it - values.begin());
}

double FeatureSpec::snap(double value) const {
  if (is_discrete()) {
    double hi = static_cast<double>(values.size()) - 1.0;
    return std::clamp(std::round(value), 0.0, hi);
  }
  double clamped = std::clamp(value, min, max);
  double k = std::round((clamped - min) / step);
  double snapped = min + k * step;
  if (snapped > max + 1e-12) snapped -= step;
  return snapped;
}

std::optional<std::size_t> Schema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].name == name) return i;
  return std::nullopt;
}

void Schema::validate() const {
  std::set<std::string> names;
  for (const auto& f : features) {
    f.validate();
    if (!names.insert(f.name).second) throw SchemaError("duplicate feature '" + f.name + "'");
    if (f.name == target.name) throw SchemaError("target '" + f.name + "' listed as a feature");
  }
  if (target.max_class < target.min_class) throw SchemaError("target range is empty");
  if (target.min_class != 0) throw SchemaError("target classes must start at 0");
}

Schema Schema::without_groups(const std::set<std::string>& groups) const {
  Schema out;
  out.target = target;
  for (const auto& f : features)
    if (!groups.count(f.group)) out.features.push_back(f);
  return out;
}

Schema parse_schema(const std::string& text) {
  Schema schema;
  bool have_target = false;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream tokens(line);
    std::string head;
    tokens >> head;
    std::map<std::string, std::string> kv;
    std::string tok;
    while (tokens >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw SchemaError("schema line " + std::to_string(lineno) + ": expected key=value, got '" + tok + "'");
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    auto need = [&](const std::string& key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end())
        throw SchemaError("schema line " + std::to_string(lineno) + ": missing '" + key + "'");
      return it->second;
    };
    auto need_number = [&](const std::string& key) {
      auto v = parse_number(need(key));
      if (!v) throw SchemaError("schema line " + std::to_string(lineno) + ": '" + key + "' is not a number");
      return *v;
    };
    if (head == "feature") {
      FeatureKind kind = feature_kind_from_string(need("kind"));
      std::string group = kv.count("group") ? kv["group"] : std::string{};
      if (kind == FeatureKind::discrete) {
        schema.features.push_back(
            FeatureSpec::discrete(need("name"), split_list(need("values"), ','), group));
      } else {
        schema.features.push_back(FeatureSpec::continuous(
            need("name"), need_number("min"), need_number("max"),
            kv.count("step") ? need_number("step") : 1.0, group));
      }
    } else if (head == "target") {
      schema.target.name = need("name");
      schema.target.min_class = static_cast<int>(need_number("min"));
      schema.target.max_class = static_cast<int>(need_number("max"));
      have_target = true;
    } else {
      throw SchemaError("schema line " + std::to_string(lineno) + ": unknown entry '" + head + "'");
    }
  }
  if (!have_target) throw SchemaError("schema has no target line");
  schema.validate();
  return schema;
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

std::string format_schema(const Schema& schema) {
  std::ostringstream out;
  for (const auto& f : schema.features) {
    out << "feature name=" << f.name << " kind=" << to_string(f.kind);
    if (f.is_discrete()) {
      out << " values=";
      for (std::size_t i = 0; i < f.values.size(); ++i) out << (i ? "," : "") << f.values[i];
    } else {
      out << " min=" << format_number(f.min) << " max=" << format_number(f.max)
          << " step=" << format_number(f.step);
    }
    if (!f.group.empty()) out << " group=" << f.group;
    out << '\n';
  }
  out << "target name=" << schema.target.name << " min=" << schema.target.min_class
      << " max=" << schema.target.max_class << '\n';
  return out.str();
}

Schema student_schema(bool include_period_grades) {
  const std::vector<std::string> yes_no{"no", "yes"};
  const std::vector<std::string> jobs{"at_home", "health", "other", "services", "teacher"};
  const std::vector<std::string> one_to_four{"1", "2", "3", "4"};
  const std::vector<std::string> zero_to_four{"0", "1", "2", "3", "4"};
  const std::vector<std::string> one_to_five{"1", "2", "3", "4", "5"};
  Schema s;
  auto& f = s.features;
  f.push_back(FeatureSpec::discrete("school", {"GP", "MS"}));
  f.push_back(FeatureSpec::discrete("sex", {"F", "M"}));
  f.push_back(FeatureSpec::continuous("age", 15, 22, 1));
  f.push_back(FeatureSpec::discrete("address", {"R", "U"}));
  f.push_back(FeatureSpec::discrete("famsize", {"GT3", "LE3"}));
  f.push_back(FeatureSpec::discrete("Pstatus", {"A", "T"}));
  f.push_back(FeatureSpec::discrete("Medu", zero_to_four));
  f.push_back(FeatureSpec::discrete("Fedu", zero_to_four));
  f.push_back(FeatureSpec::discrete("Mjob", jobs));
  f.push_back(FeatureSpec::discrete("Fjob", jobs));
  f.push_back(FeatureSpec::discrete("reason", {"course", "home", "other", "reputation"}));
  f.push_back(FeatureSpec::discrete("guardian", {"father", "mother", "other"}));
  f.push_back(FeatureSpec::discrete("traveltime", one_to_four));
  f.push_back(FeatureSpec::discrete("studytime", one_to_four));
  f.push_back(FeatureSpec::discrete("failures", {"0", "1", "2", "3"}));
  for (const char* name : {"schoolsup", "famsup", "paid", "activities", "nursery", "higher",
                           "internet", "romantic"})
    f.push_back(FeatureSpec::discrete(name, yes_no));
  for (const char* name : {"famrel", "freetime", "goout", "Dalc", "Walc", "health"})
    f.push_back(FeatureSpec::discrete(name, one_to_five));
  f.push_back(FeatureSpec::continuous("absences", 0, 93, 1));
  if (include_period_grades) {
    f.push_back(FeatureSpec::continuous("G1", 0, 20, 1, "period_grade"));
    f.push_back(FeatureSpec::continuous("G2", 0, 20, 1, "period_grade"));
  }
  s.target = TargetSpec{"G3", 0, 20};
  s.validate();
  return s;
}

Dataset::Dataset(Schema schema, std::vector<Sample> samples)
    : schema_(std::move(schema)), samples_(std::move(samples)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    std::string problem = check_sample(schema_, samples_[i]);
    if (!problem.empty()) throw RowError(i, problem);
    class_index_[samples_[i].target].push_back(i);
  }
}

std::string Dataset::check_sample(const Schema& schema, const Sample& s) {
  if (s.features.size() != schema.size())
    return "expected " + std::to_string(schema.size()) + " features, got " +
           std::to_string(s.features.size());
  if (s.target < schema.target.min_class || s.target > schema.target.max_class)
    return "target " + std::to_string(s.target) + " outside [" +
           std::to_string(schema.target.min_class) + ", " +
           std::to_string(schema.target.max_class) + "]";
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (!schema[f].admits(s.features[f]))
      return "value " + format_number(s.features[f]) + " outside domain of '" +
             schema[f].name + "'";
  }
  return {};
}

std::vector<int> Dataset::targets() const {
  std::vector<int> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.target);
  return out;
}

std::set<int> Dataset::classes_present() const {
  std::set<int> out;
  for (const auto& [c, idx] : class_index_) out.insert(c);
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples_.at(i));
  return Dataset(schema_, std::move(out));
}

Dataset Dataset::concat(const Dataset& other) const {
  if (other.schema_.size() != schema_.size())
    throw SchemaError("cannot concatenate datasets with different schemas");
  std::vector<Sample> out = samples_;
  out.insert(out.end(), other.samples_.begin(), other.samples_.end());
  return Dataset(schema_, std::move(out));
}

Dataset Dataset::with_samples(std::vector<Sample> samples) const {
  return Dataset(schema_, std::move(samples));
}

Dataset parse_csv(const std::string& text, const Schema& schema) {
  schema.validate();
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("CSV has no header row");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> cols;
  for (const auto& f : schema.features) cols.push_back(column(f.name));
  std::size_t target_col = column(schema.target.name);

  std::vector<Sample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() < header.size())
      throw RowError(row, "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
    Sample s;
    s.features.resize(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const std::string cell = trim(fields[cols[f]]);
      const auto& spec = schema[f];
      if (spec.is_discrete()) {
        try {
          s.features[f] = static_cast<double>(spec.code_of(cell));
        } catch (const SchemaError& e) {
          throw RowError(row, e.what());
        }
      } else {
        auto v = parse_number(cell);
        if (!v) throw RowError(row, "non-numeric value '" + cell + "' in '" + spec.name + "'");
        s.features[f] = *v;
      }
    }
    auto t = parse_number(fields[target_col]);
    if (!t || *t != std::floor(*t))
      throw RowError(row, "non-integer target '" + fields[target_col] + "'");
    s.target = static_cast<int>(*t);
    std::string problem = Dataset::check_sample(schema, s);
    if (!problem.empty()) throw RowError(row, problem);
    samples.push_back(std::move(s));
    ++row;
  }
  return Dataset(schema, std::move(samples));
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open CSV file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

std::string format_csv(const Dataset& d, const std::vector<std::size_t>* source_index) {
  const Schema& schema = d.schema();
  std::ostringstream out;
  for (std::size_t f = 0; f < schema.size(); ++f) out << '"' << schema[f].name << "\";";
  out << '"' << schema.target.name << '"';
  if (source_index) out << ";\"source_index\";\"synthetic\"";
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Sample& s = d[i];
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (schema[f].is_discrete())
        out << '"' << schema[f].values[static_cast<std::size_t>(s.features[f])] << "\";";
      else
        out << format_number(s.features[f]) << ';';
    }
    out << s.target;
    if (source_index) out << ';' << source_index->at(i) << ';' << (s.synthetic ? 1 : 0);
    out << '\n';
  }
  return out.str();
}

void write_csv(const std::filesystem::path& path, const Dataset& d,
               const std::vector<std::size_t>* source_index) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write CSV file " + path.string());
  out << format_csv(d, source_index);
}

std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  Rng rng(seed);
  const std::size_t total = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(d.size())));

  struct Quota {
    int cls;
    std::vector<std::size_t> members;
    std::size_t take;
    double residue;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [cls, idx] : d.class_index()) {
    Quota q{cls, idx, 0, 0.0};
    shuffle_in_place(q.members, rng);
    if (idx.size() >= 2) {
      double ideal = test_fraction * static_cast<double>(idx.size());
      q.take = std::min<std::size_t>(static_cast<std::size_t>(std::floor(ideal)), idx.size() - 1);
      q.residue = ideal - static_cast<double>(q.take);
    }
    assigned += q.take;
    quotas.push_back(std::move(q));
  }
  // Largest-remainder top-up towards the exact total, keeping one row of
  // each class in train while possible.
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return quotas[a].residue > quotas[b].residue; });
  for (int pass = 0; pass < 2 && assigned != total; ++pass) {
    for (std::size_t oi = 0; oi < order.size() && assigned != total; ++oi) {
      Quota& q = quotas[order[oi]];
      if (assigned < total) {
        std::size_t cap = pass == 0 ? (q.members.size() >= 2 ? q.members.size() - 1 : 0) : q.members.size();
        if (q.take < cap) {
          ++q.take;
          ++assigned;
        }
      } else if (q.take > 0) {
        --q.take;
        --assigned;
      }
    }
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (const auto& q : quotas) {
    for (std::size_t i = 0; i < q.members.size(); ++i)
      (i < q.take ? test_idx : train_idx).push_back(q.members[i]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {d.subset(train_idx), d.subset(test_idx)};
}

std::map<int, std::size_t> class_distribution(const Dataset& d) {
  std::map<int, std::size_t> out;
  for (const auto& [cls, idx] : d.class_index()) out[cls] = idx.size();
  return out;
}

Encoder::Encoder(Schema schema) : schema_(std::move(schema)) {
  offsets_.reserve(schema_.size());
  for (const auto& f : schema_.features) {
    offsets_.push_back(one_hot_width_);
    one_hot_width_ += f.is_discrete() ? f.cardinality() : 1;
  }
}

double Encoder::encode_value(std::size_t feature, double value) const {
  const auto& f = schema_[feature];
  if (f.is_discrete()) return value;
  return (value - f.min) / (f.max - f.min);
}

double Encoder::decode_value(std::size_t feature, double encoded) const {
  const auto& f = schema_[feature];
  if (f.is_discrete()) return f.snap(encoded);
  return f.snap(f.min + encoded * (f.max - f.min));
}

RowVector Encoder::encode_sample(const Sample& s) const {
  RowVector row(static_cast<Eigen::Index>(schema_.size()));
  for (std::size_t f = 0; f < schema_.size(); ++f)
    row(static_cast<Eigen::Index>(f)) = encode_value(f, s.features[f]);
  return row;
}

Matrix Encoder::encode(const Dataset& d) const {
  Matrix m(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(schema_.size()));
  for (std::size_t i = 0; i < d.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = encode_sample(d[i]);
  return m;
}

Sample Encoder::decode_row(const Eigen::Ref<const RowVector>& row, int target) const {
  Sample s;
  s.target = target;
  s.features.resize(schema_.size());
  for (std::size_t f = 0; f < schema_.size(); ++f)
    s.features[f] = decode_value(f, row(static_cast<Eigen::Index>(f)));
  return s;
}

Matrix Encoder::one_hot(const Dataset& d) const {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(one_hot_width_));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t f = 0; f < schema_.size(); ++f) {
      const auto off = static_cast<Eigen::Index>(offsets_[f]);
      if (schema_[f].is_discrete())
        m(r, off + static_cast<Eigen::Index>(d[i].features[f])) = 1.0;
      else
        m(r, off) = encode_value(f, d[i].features[f]);
    }
  }
  return m;
}

}  // namespace sedg
