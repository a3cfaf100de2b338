#include "sedg/baselines.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "sedg/config.hpp"

namespace sedg {

const char* to_string(ResampleKind k) {
  switch (k) {
    case ResampleKind::random_over: return "random_over";
    case ResampleKind::random_under_majority: return "random_under_majority";
    case ResampleKind::smote: return "smote";
    case ResampleKind::tomek: return "tomek";
    case ResampleKind::enn: return "enn";
    case ResampleKind::smote_tomek: return "smote_tomek";
    case ResampleKind::smote_enn: return "smote_enn";
  }
  return "?";
}

ResampleKind resample_kind_from_string(const std::string& s) {
  for (auto k : {ResampleKind::random_over, ResampleKind::random_under_majority, ResampleKind::smote,
                 ResampleKind::tomek, ResampleKind::enn, ResampleKind::smote_tomek, ResampleKind::smote_enn})
    if (s == to_string(k)) return k;
  if (s == "ros") return ResampleKind::random_over;
  if (s == "rus") return ResampleKind::random_under_majority;
  throw ConfigError("unknown resampling method '" + s + "'");
}

nlohmann::json to_json(const ResampleMethod& m) {
  return {{"kind", to_string(m.kind)}, {"smote_k", m.smote_k}, {"enn_k", m.enn_k}};
}

ResampleMethod resample_method_from_json(const nlohmann::json& j) {
  if (j.is_string()) return {resample_kind_from_string(j.get<std::string>())};
  check_keys(j, {"kind", "smote_k", "enn_k"}, "resampling method");
  ResampleMethod m;
  if (j.contains("kind")) m.kind = resample_kind_from_string(j["kind"].get<std::string>());
  m.smote_k = get_or(j, "smote_k", m.smote_k);
  m.enn_k = get_or(j, "enn_k", m.enn_k);
  if (m.smote_k < 1) throw ConfigError("smote_k must be >= 1");
  if (m.enn_k < 1) throw ConfigError("enn_k must be >= 1");
  return m;
}

std::size_t median_class_size(const std::map<int, std::size_t>& sizes) {
  if (sizes.empty()) return 0;
  std::vector<std::size_t> v;
  for (const auto& [c, n] : sizes) v.push_back(n);
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return (v[m - 1] + v[m] + 1) / 2;
}

std::vector<std::size_t> nearest_rows(const Matrix& x, std::size_t i, const std::vector<std::size_t>& pool,
                                      std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(pool.size());
  const auto qi = static_cast<Eigen::Index>(i);
  for (std::size_t j : pool) {
    if (j == i) continue;
    d.emplace_back((x.row(static_cast<Eigen::Index>(j)) - x.row(qi)).squaredNorm(), j);
  }
  k = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < k; ++t) out.push_back(d[t].second);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const Dataset& d) {
  const Matrix x = Encoder(d.schema()).encode(d);
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> nn(d.size(), 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto r = nearest_rows(x, i, all, 1);
    nn[i] = r.empty() ? i : r[0];
  }
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t j = nn[i];
    if (j > i && nn[j] == i && d[i].target != d[j].target) links.emplace_back(i, j);
  }
  return links;
}

namespace {

std::map<int, std::size_t> sizes_of(const Dataset& d) { return class_distribution(d); }

Dataset drop_rows(const Dataset& d, const std::vector<bool>& remove, ResampleTrace* trace) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (remove[i]) {
      if (trace) trace->removed.push_back(i);
    } else {
      keep.push_back(i);
    }
  }
  return d.subset(keep);
}

Dataset random_over(const Dataset& train, Rng& rng) {
  std::size_t largest = 0;
  for (const auto& [c, idx] : train.class_index()) largest = std::max(largest, idx.size());
  std::vector<Sample> added;
  for (const auto& [c, idx] : train.class_index())
    for (std::size_t t = idx.size(); t < largest; ++t) {
      Sample s = train[idx[uniform_index(rng, idx.size())]];
      s.synthetic = true;
      added.push_back(std::move(s));
    }
  return train.concat(train.with_samples(std::move(added)));
}

Dataset random_under(const Dataset& train, Rng& rng, ResampleTrace* trace) {
  const std::size_t floor = std::max<std::size_t>(1, median_class_size(sizes_of(train)));
  std::vector<bool> remove(train.size(), false);
  for (const auto& [c, idx] : train.class_index()) {
    if (idx.size() <= floor) continue;
    std::vector<std::size_t> order = idx;
    shuffle_in_place(order, rng);
    for (std::size_t t = floor; t < order.size(); ++t) remove[order[t]] = true;
  }
  return drop_rows(train, remove, trace);
}

Dataset smote(const Dataset& train, std::size_t k, Rng& rng, ResampleTrace* trace) {
  const Encoder enc(train.schema());
  const Matrix x = enc.encode(train);
  std::size_t largest = 0;
  for (const auto& [c, idx] : train.class_index()) largest = std::max(largest, idx.size());
  std::vector<Sample> added;
  for (const auto& [c, idx] : train.class_index()) {
    if (idx.size() >= largest) continue;
    const std::size_t need = largest - idx.size();
    if (idx.size() < 2) {
      log_warning("class " + std::to_string(c) + " has a single sample; SMOTE duplicates it");
      for (std::size_t t = 0; t < need; ++t) {
        Sample s = train[idx[0]];
        s.synthetic = true;
        added.push_back(std::move(s));
      }
      continue;
    }
    std::map<std::size_t, std::vector<std::size_t>> neighbours;
    for (std::size_t t = 0; t < need; ++t) {
      const std::size_t src = idx[uniform_index(rng, idx.size())];
      auto it = neighbours.find(src);
      if (it == neighbours.end()) it = neighbours.emplace(src, nearest_rows(x, src, idx, k)).first;
      const std::size_t nb = it->second[uniform_index(rng, it->second.size())];
      const double u = uniform01(rng);
      const auto is = static_cast<Eigen::Index>(src);
      RowVector p = x.row(is) + u * (x.row(static_cast<Eigen::Index>(nb)) - x.row(is));
      Sample s = enc.decode_row(p, c);
      s.synthetic = true;
      added.push_back(std::move(s));
      if (trace) trace->smote.push_back({src, nb, u, std::move(p)});
    }
  }
  return train.concat(train.with_samples(std::move(added)));
}

Dataset tomek_clean(const Dataset& d, const std::map<int, std::size_t>& reference, ResampleTrace* trace) {
  std::vector<bool> remove(d.size(), false);
  auto size_of = [&](int c) {
    auto it = reference.find(c);
    return it == reference.end() ? std::size_t{0} : it->second;
  };
  for (const auto& [i, j] : tomek_links(d)) {
    const std::size_t si = size_of(d[i].target), sj = size_of(d[j].target);
    if (si >= sj) remove[i] = true;
    if (sj >= si) remove[j] = true;
  }
  return drop_rows(d, remove, trace);
}

Dataset enn_clean(const Dataset& d, std::size_t k, const std::map<int, std::size_t>& reference,
                  ResampleTrace* trace) {
  const std::size_t median = median_class_size(reference);
  const Matrix x = Encoder(d.schema()).encode(d);
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<bool> remove(d.size(), false);
  std::map<int, std::size_t> remaining = sizes_of(d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int c = d[i].target;
    auto it = reference.find(c);
    if (it == reference.end() || it->second <= median) continue;
    std::size_t agree = 0;
    const auto nb = nearest_rows(x, i, all, k);
    for (std::size_t j : nb)
      if (d[j].target == c) ++agree;
    if (2 * agree < nb.size() + 1 && remaining[c] > 1) {
      remove[i] = true;
      --remaining[c];
    }
  }
  return drop_rows(d, remove, trace);
}

}  // namespace

Dataset resample(const Dataset& train, const ResampleMethod& method, std::uint64_t seed, ResampleTrace* trace) {
  if (train.empty()) throw std::invalid_argument("resample: empty training set");
  if (method.smote_k < 1) throw ConfigError("smote_k must be >= 1");
  Rng rng(seed);
  const auto reference = sizes_of(train);
  switch (method.kind) {
    case ResampleKind::random_over: return random_over(train, rng);
    case ResampleKind::random_under_majority: return random_under(train, rng, trace);
    case ResampleKind::smote: return smote(train, method.smote_k, rng, trace);
    case ResampleKind::tomek: return tomek_clean(train, reference, trace);
    case ResampleKind::enn: return enn_clean(train, method.enn_k, reference, trace);
    case ResampleKind::smote_tomek: return tomek_clean(smote(train, method.smote_k, rng, trace), reference, trace);
    case ResampleKind::smote_enn:
      return enn_clean(smote(train, method.smote_k, rng, trace), method.enn_k, reference, trace);
  }
  return train;
}

}  // namespace sedg
