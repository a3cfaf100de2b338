#include "sedg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "sedg/config.hpp"

#ifndef SEDG_DATA_DIR
#define SEDG_DATA_DIR "data"
#endif

namespace sedg {

namespace fs = std::filesystem;

nlohmann::json to_json(const DatasetConfig& c) {
  return {{"path", c.path}, {"schema", c.schema}, {"include_period_grades", c.include_period_grades}};
}

DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"path", "schema", "include_period_grades"}, "dataset");
  DatasetConfig c;
  c.path = get_or<std::string>(j, "path", "");
  c.schema = get_or<std::string>(j, "schema", "");
  c.include_period_grades = get_or(j, "include_period_grades", true);
  return c;
}

namespace {

fs::path anchor(const std::string& p, const fs::path& base) {
  fs::path path(p);
  if (path.is_relative() && !base.empty() && !fs::exists(path)) return base / path;
  return path;
}

fs::path resolve_data_path(const DatasetConfig& c, const fs::path& base) {
  if (!c.path.empty()) return anchor(c.path, base);
  if (const char* env = std::getenv("SEDG_DATA"); env && *env) return env;
  for (const fs::path& dir : {fs::path("data"), fs::path(SEDG_DATA_DIR)}) {
    if (fs::exists(dir / "student-por.csv")) return dir / "student-por.csv";
  }
  for (const fs::path& dir : {fs::path("data"), fs::path(SEDG_DATA_DIR)}) {
    if (fs::exists(dir / "student-por-standin.csv")) return dir / "student-por-standin.csv";
  }
  throw ConfigError("no dataset found: set dataset.path or SEDG_DATA");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

Dataset load_dataset(const DatasetConfig& c, const fs::path& base_dir) {
  Schema schema;
  if (c.schema.empty() || c.schema == "student") {
    schema = student_schema(c.include_period_grades);
  } else {
    schema = load_schema(anchor(c.schema, base_dir));
    if (!c.include_period_grades) schema = schema.without_groups({"period_grade"});
  }
  const fs::path path = resolve_data_path(c, base_dir);
  if (!fs::exists(path)) throw ConfigError("dataset file not found: " + path.string());
  return load_csv(path, schema);
}

nlohmann::json to_json(const EmbeddingConfig& c) {
  return {{"source", to_string(c.source)},
          {"granularity", to_string(c.granularity)},
          {"pca_components", c.pca_components},
          {"model", nn::to_json(c.model)},
          {"bottleneck", c.bottleneck},
          {"train", nn::to_json(c.train)}};
}

EmbeddingConfig embedding_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"source", "granularity", "pca_components", "model", "bottleneck", "train"}, "embedding");
  EmbeddingConfig c;
  if (j.contains("source")) c.source = embedding_source_from_string(j["source"].get<std::string>());
  if (j.contains("granularity")) c.granularity = granularity_from_string(j["granularity"].get<std::string>());
  c.pca_components = get_or(j, "pca_components", c.pca_components);
  if (j.contains("model")) c.model = nn::nn_config_from_json(j["model"]);
  c.bottleneck = get_or(j, "bottleneck", c.bottleneck);
  if (j.contains("train")) c.train = nn::train_config_from_json(j["train"]);
  return c;
}

std::shared_ptr<Embedder> build_embedder(const Dataset& train, const EmbeddingConfig& cfg, bool need_pca,
                                         std::uint64_t seed, const Classifier* trained) {
  nn::TrainConfig tcfg = cfg.train;
  tcfg.seed = seed;
  std::shared_ptr<Embedder> out;
  switch (cfg.source) {
    case EmbeddingSource::classifier_transfer: {
      std::shared_ptr<const nn::NnModel> model;
      if (auto* nc = dynamic_cast<const NnClassifier*>(trained); nc && nc->trained()) model = nc->model();
      if (!model) {
        nn::NnModelConfig mc = cfg.model;
        mc.output_classes = train.num_classes();
        model = std::make_shared<nn::NnModel>(nn::train_classifier(train, mc, tcfg));
      }
      out = std::make_shared<Embedder>(Embedder::from_classifier(model, cfg.granularity));
      break;
    }
    case EmbeddingSource::autoencoder_bottleneck:
      out = std::make_shared<Embedder>(Embedder::from_autoencoder(
          std::make_shared<nn::TabularAutoencoder>(nn::train_autoencoder(train, cfg.bottleneck, tcfg)),
          cfg.granularity));
      break;
    case EmbeddingSource::vae_latent:
      out = std::make_shared<Embedder>(Embedder::from_autoencoder(
          std::make_shared<nn::TabularAutoencoder>(nn::train_vae(train, cfg.bottleneck, tcfg)), cfg.granularity));
      break;
    case EmbeddingSource::identity:
      out = std::make_shared<Embedder>(Embedder::identity(train.schema()));
      break;
  }
  if (need_pca) out->fit_pca(Encoder(train.schema()).encode(train), cfg.pca_components);
  return out;
}

const char* to_string(MethodKind k) {
  switch (k) {
    case MethodKind::none: return "none";
    case MethodKind::baseline: return "baseline";
    case MethodKind::sedg: return "sedg";
    case MethodKind::dgm: return "dgm";
    case MethodKind::embedding_preprocess: return "embedding_preprocess";
  }
  return "?";
}

std::string MethodConfig::display_label() const {
  if (!label.empty()) return label;
  switch (kind) {
    case MethodKind::none: return "none";
    case MethodKind::baseline: return to_string(baseline.kind);
    case MethodKind::sedg: return short_label(plan.strategy.mode);
    case MethodKind::dgm: return to_string(dgm.kind);
    case MethodKind::embedding_preprocess: return "embedding";
  }
  return "?";
}

GenerationPlan MethodConfig::effective_plan(std::size_t count) const {
  GenerationPlan p = plan;
  p.count = count;
  if (!plan_k_explicit) p.selection.k = CountRange::fixed(std::max<std::size_t>(1, count));
  return p;
}

nlohmann::json to_json(const MethodConfig& m) {
  nlohmann::json j{{"kind", to_string(m.kind)}, {"label", m.display_label()}};
  switch (m.kind) {
    case MethodKind::none: break;
    case MethodKind::baseline: j["baseline"] = to_json(m.baseline); break;
    case MethodKind::sedg:
      j["plan"] = to_json(m.plan);
      j["usage"] = to_json(m.usage);
      j["embedding"] = to_json(m.embedding);
      break;
    case MethodKind::dgm:
      j["dgm"] = to_json(m.dgm);
      j["dgm_train"] = nn::to_json(m.dgm_train);
      break;
    case MethodKind::embedding_preprocess: j["embedding"] = to_json(m.embedding); break;
  }
  return j;
}

MethodConfig method_config_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    MethodConfig m;
    const auto s = j.get<std::string>();
    if (s == "none") return m;
    m.kind = MethodKind::baseline;
    m.baseline.kind = resample_kind_from_string(s);
    return m;
  }
  check_keys(j, {"kind", "label", "baseline", "plan", "usage", "embedding", "dgm", "dgm_train"}, "method");
  MethodConfig m;
  const auto kind = get_or<std::string>(j, "kind", "none");
  if (kind == "none") m.kind = MethodKind::none;
  else if (kind == "baseline") m.kind = MethodKind::baseline;
  else if (kind == "sedg") m.kind = MethodKind::sedg;
  else if (kind == "dgm") m.kind = MethodKind::dgm;
  else if (kind == "embedding_preprocess") m.kind = MethodKind::embedding_preprocess;
  else throw ConfigError("unknown method kind '" + kind + "'");
  m.label = get_or<std::string>(j, "label", "");
  if (j.contains("baseline")) m.baseline = resample_method_from_json(j["baseline"]);
  if (j.contains("plan")) {
    m.plan = generation_plan_from_json(j["plan"]);
    m.plan_k_explicit = j["plan"].contains("selection") && j["plan"]["selection"].contains("k");
  }
  if (j.contains("usage")) m.usage = usage_policy_from_json(j["usage"]);
  if (j.contains("embedding")) m.embedding = embedding_config_from_json(j["embedding"]);
  if (j.contains("dgm")) m.dgm = dgm_config_from_json(j["dgm"]);
  if (j.contains("dgm_train")) m.dgm_train = nn::train_config_from_json(j["dgm_train"]);
  return m;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  make_classifier(classifier, classifier_config, 0);
  if (method.kind == MethodKind::dgm) {
    method.dgm_train.validate();
    const auto sel = method.dgm.selection.kind;
    if (method.dgm.input_source == InputSource::selected_samples &&
        (sel == SelectionKind::pess || sel == SelectionKind::ppss))
      throw ConfigError("generative models accept rss or pass sample selection");
  }
  if (method.kind == MethodKind::sedg || method.kind == MethodKind::embedding_preprocess)
    method.embedding.train.validate();
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"dataset", to_json(c.dataset)},
          {"classifier", c.classifier},
          {"classifier_config", c.classifier_config},
          {"method", to_json(c.method)},
          {"trials", c.trials},
          {"test_fraction", c.test_fraction},
          {"synthetic_count", c.synthetic_count},
          {"root_seed", c.root_seed},
          {"resplit", c.resplit}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"name", "dataset", "classifier", "classifier_config", "method", "trials", "test_fraction",
                 "synthetic_count", "root_seed", "resplit", "threads"},
             "experiment");
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", c.name);
  if (j.contains("dataset")) c.dataset = dataset_config_from_json(j["dataset"]);
  c.classifier = get_or<std::string>(j, "classifier", c.classifier);
  if (j.contains("classifier_config")) c.classifier_config = j["classifier_config"];
  if (j.contains("method")) c.method = method_config_from_json(j["method"]);
  c.trials = get_or(j, "trials", c.trials);
  c.test_fraction = get_or(j, "test_fraction", c.test_fraction);
  c.synthetic_count = get_or(j, "synthetic_count", c.synthetic_count);
  c.root_seed = get_or(j, "root_seed", c.root_seed);
  c.resplit = get_or(j, "resplit", c.resplit);
  c.threads = get_or(j, "threads", c.threads);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

nlohmann::json to_json(const TrialRecord& t) {
  nlohmann::json pi = nlohmann::json::object();
  for (const auto& [c, v] : t.pi_class_auc) pi[std::to_string(c)] = v;
  nlohmann::json j{{"trial", t.trial},
                   {"seed", t.seed},
                   {"split_seed", t.split_seed},
                   {"ok", t.ok},
                   {"train_size", t.train_size},
                   {"test_size", t.test_size},
                   {"treated_train_size", t.treated_train_size}};
  if (!t.ok) {
    j["error"] = t.error;
    return j;
  }
  j["baseline"] = to_json(t.baseline);
  j["treated"] = to_json(t.treated);
  j["pi"] = {{"accuracy", t.pi_accuracy}, {"macro_auc", t.pi_macro_auc}, {"class_auc", pi}};
  return j;
}

TrialRecord trial_record_from_json(const nlohmann::json& j) {
  TrialRecord t;
  t.trial = j.at("trial").get<std::size_t>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.split_seed = j.at("split_seed").get<std::uint64_t>();
  t.ok = j.at("ok").get<bool>();
  t.train_size = j.value("train_size", std::size_t{0});
  t.test_size = j.value("test_size", std::size_t{0});
  t.treated_train_size = j.value("treated_train_size", std::size_t{0});
  if (!t.ok) {
    t.error = j.value("error", "");
    return t;
  }
  t.baseline = metric_report_from_json(j.at("baseline"));
  t.treated = metric_report_from_json(j.at("treated"));
  const auto& pi = j.at("pi");
  t.pi_accuracy = pi.at("accuracy").get<double>();
  t.pi_macro_auc = pi.at("macro_auc").get<double>();
  for (const auto& [k, v] : pi.at("class_auc").items()) t.pi_class_auc[std::stoi(k)] = v.get<double>();
  return t;
}

namespace {

PiStats stats_of(const std::vector<double>& v) {
  PiStats s;
  s.n = v.size();
  if (v.empty()) return s;
  s.max = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

nlohmann::json stats_json(const PiStats& s) { return {{"max", s.max}, {"mean", s.mean}, {"std", s.std}, {"n", s.n}}; }

}  // namespace

PiSummary summarize(const std::vector<TrialRecord>& trials) {
  std::vector<double> acc, mac;
  std::map<int, std::vector<double>> cls;
  for (const auto& t : trials) {
    if (!t.ok) continue;
    acc.push_back(t.pi_accuracy);
    mac.push_back(t.pi_macro_auc);
    for (const auto& [c, v] : t.pi_class_auc) cls[c].push_back(v);
  }
  PiSummary s;
  s.accuracy = stats_of(acc);
  s.macro_auc = stats_of(mac);
  for (const auto& [c, v] : cls) s.class_auc[c] = stats_of(v);
  return s;
}

nlohmann::json to_json(const PiSummary& s) {
  nlohmann::json cls = nlohmann::json::object();
  for (const auto& [c, v] : s.class_auc) cls[std::to_string(c)] = stats_json(v);
  return {{"accuracy", stats_json(s.accuracy)}, {"macro_auc", stats_json(s.macro_auc)}, {"class_auc", cls}};
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& r : trials) t.push_back(sedg::to_json(r));
  return {{"format", "sedg-report"},
          {"version", 1},
          {"name", name},
          {"config", config},
          {"config_hash", config_hash},
          {"summary", sedg::to_json(summary)},
          {"trials", t}};
}

ExperimentReport ExperimentReport::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sedg-report") throw ConfigError("not a benchmark report");
  ExperimentReport r;
  r.name = j.value("name", "");
  r.config = j.at("config");
  r.config_hash = j.value("config_hash", "");
  for (const auto& t : j.at("trials")) r.trials.push_back(trial_record_from_json(t));
  r.summary = summarize(r.trials);
  return r;
}

namespace {

struct TrialData {
  Dataset train;
  Dataset test;
  std::set<int> exclude;
  std::unique_ptr<Classifier> prototype;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
};

TrialData prepare_trial(const ExperimentConfig& cfg, const Dataset& data, std::size_t trial) {
  TrialData td;
  td.seed = derive_seed(cfg.root_seed, trial);
  td.split_seed = cfg.resplit ? derive_seed(td.seed, 1) : derive_seed(cfg.root_seed, 0xfffff);
  std::tie(td.train, td.test) = split(data, cfg.test_fraction, td.split_seed);
  for (int c : td.test.classes_present())
    if (!td.train.classes_present().count(c)) td.exclude.insert(c);
  td.prototype = make_classifier(cfg.classifier, cfg.classifier_config, derive_seed(td.seed, 2));
  return td;
}

bool needs_embedder(const GenerationPlan& p) { return p.strategy.mode != ModificationMode::random; }
bool needs_pca(const GenerationPlan& p) {
  return p.strategy.mode == ModificationMode::pca_cosine || p.strategy.mode == ModificationMode::pca_nn;
}

std::shared_ptr<Embedder> sedg_embedder(const MethodConfig& m, const GenerationPlan& plan, const Dataset& train,
                                        std::uint64_t seed, const Classifier* trained) {
  if (!needs_embedder(plan)) return nullptr;
  EmbeddingConfig ec = m.embedding;
  ec.granularity = plan.strategy.granularity;
  return build_embedder(train, ec, needs_pca(plan), seed, trained);
}

DgmModel trial_dgm(const MethodConfig& m, const Dataset& train, std::uint64_t seed) {
  nn::TrainConfig t = m.dgm_train;
  t.seed = seed;
  return train_dgm(train, m.dgm, t);
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& cfg, const Dataset& data, std::size_t trial) {
  TrialRecord rec;
  rec.trial = trial;
  try {
    TrialData td = prepare_trial(cfg, data, trial);
    rec.seed = td.seed;
    rec.split_seed = td.split_seed;
    rec.train_size = td.train.size();
    rec.test_size = td.test.size();
    auto base = td.prototype->clone();
    base->fit(td.train);
    rec.baseline = evaluate(*base, td.test, td.exclude);

    std::unique_ptr<Classifier> treated;
    rec.treated_train_size = td.train.size();
    const auto& m = cfg.method;
    switch (m.kind) {
      case MethodKind::none:
        treated = td.prototype->clone();
        treated->fit(td.train);
        break;
      case MethodKind::baseline: {
        const Dataset resampled = resample(td.train, m.baseline, derive_seed(td.seed, 3));
        treated = td.prototype->clone();
        treated->fit(resampled);
        rec.treated_train_size = resampled.size();
        break;
      }
      case MethodKind::sedg: {
        const GenerationPlan plan = m.effective_plan(cfg.synthetic_count);
        auto embedder = sedg_embedder(m, plan, td.train, derive_seed(td.seed, 4), base.get());
        const Classifier* proto = td.prototype.get();
        const Dataset& train = td.train;
        BatchGenerator gen = [&](std::size_t, const Classifier* current, std::uint64_t s) {
          GenerationModels models;
          models.trained = current;
          models.prototype = proto;
          models.embedder = embedder;
          return generate_batch(train, plan, models, s);
        };
        auto result = run_usage_cycle(td.train, nullptr, gen, m.usage, *td.prototype, base.get(),
                                      derive_seed(td.seed, 5));
        rec.treated_train_size = result.final_train.size();
        treated = std::move(result.classifier);
        break;
      }
      case MethodKind::dgm: {
        const DgmModel model = trial_dgm(m, td.train, derive_seed(td.seed, 4));
        const auto batch = generate_dgm(model, td.train, cfg.synthetic_count, nullptr, derive_seed(td.seed, 5));
        const Dataset augmented = td.train.concat(batch.samples);
        treated = td.prototype->clone();
        treated->fit(augmented);
        rec.treated_train_size = augmented.size();
        break;
      }
      case MethodKind::embedding_preprocess: {
        auto embedder = build_embedder(td.train, m.embedding, false, derive_seed(td.seed, 4), base.get());
        treated = embed_preprocess(*td.prototype, embedder);
        treated->fit(td.train);
        break;
      }
    }
    rec.treated = evaluate(*treated, td.test, td.exclude);
    rec.pi_accuracy = percent_improvement(rec.treated.accuracy, rec.baseline.accuracy);
    rec.pi_macro_auc = percent_improvement(rec.treated.macro_auc, rec.baseline.macro_auc);
    for (const auto& [c, v] : rec.treated.class_auc) {
      auto it = rec.baseline.class_auc.find(c);
      if (it != rec.baseline.class_auc.end()) rec.pi_class_auc[c] = percent_improvement(v, it->second);
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    if (rec.seed == 0) rec.seed = derive_seed(cfg.root_seed, trial);
  }
  return rec;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  ExperimentReport report;
  report.name = cfg.name;
  report.config = to_json(cfg);
  report.config_hash = hex64(fnv1a(report.config.dump()));
  report.trials.resize(cfg.trials);
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, cfg.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < cfg.trials; t = next++) report.trials[t] = run_trial(cfg, data, t);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  report.summary = summarize(report.trials);
  return report;
}

std::string trials_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "trial,metric,class,baseline,treated,pi\n";
  for (const auto& t : r.trials) {
    if (!t.ok) continue;
    os << t.trial << ",accuracy,," << fmt(t.baseline.accuracy) << ',' << fmt(t.treated.accuracy) << ','
       << fmt(t.pi_accuracy) << '\n';
    os << t.trial << ",macro_auc,," << fmt(t.baseline.macro_auc) << ',' << fmt(t.treated.macro_auc) << ','
       << fmt(t.pi_macro_auc) << '\n';
    for (const auto& [c, v] : t.pi_class_auc)
      os << t.trial << ",class_auc," << c << ',' << fmt(t.baseline.class_auc.at(c)) << ','
         << fmt(t.treated.class_auc.at(c)) << ',' << fmt(v) << '\n';
  }
  return os.str();
}

GridConfig grid_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"base", "methods"}, "grid");
  GridConfig g;
  g.base = experiment_config_from_json(j.at("base"));
  if (!j.contains("methods") || !j["methods"].is_array() || j["methods"].empty())
    throw ConfigError("grid needs a non-empty 'methods' array");
  for (const auto& m : j["methods"]) g.methods.push_back(method_config_from_json(m));
  return g;
}

GridResult run_grid(const GridConfig& grid, const Dataset& data) {
  if (grid.methods.empty()) throw ConfigError("grid needs at least one method");
  GridResult out;
  for (const auto& m : grid.methods) {
    GridRow row;
    row.label = m.display_label();
    try {
      ExperimentConfig cfg = grid.base;
      cfg.method = m;
      cfg.name = grid.base.name + "/" + row.label;
      row.report = run_experiment(cfg, data);
      for (const auto& t : row.report->trials)
        if (!t.ok) {
          if (row.error.empty()) row.error = "trial " + std::to_string(t.trial) + ": " + t.error;
          ++row.failed_trials;
        }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

nlohmann::json GridResult::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"label", r.label}, {"failed_trials", r.failed_trials}};
    if (!r.error.empty()) j["error"] = r.error;
    if (r.report) {
      j["config_hash"] = r.report->config_hash;
      j["summary"] = sedg::to_json(r.report->summary);
    }
    rows_json.push_back(j);
  }
  return {{"format", "sedg-grid"}, {"version", 1}, {"rows", rows_json}};
}

std::string GridResult::csv() const {
  std::ostringstream os;
  os << "method,metric,class,max,mean,std,n,note\n";
  for (const auto& r : rows) {
    const std::string note = r.error.empty() ? "" : "failed";
    if (!r.report) {
      os << r.label << ",,,,,,0," << note << '\n';
      continue;
    }
    const auto& s = r.report->summary;
    auto line = [&](const char* metric, const std::string& cls, const PiStats& p) {
      os << r.label << ',' << metric << ',' << cls << ',' << fmt(p.max) << ',' << fmt(p.mean) << ',' << fmt(p.std)
         << ',' << p.n << ',' << note << '\n';
    };
    line("accuracy", "", s.accuracy);
    line("macro_auc", "", s.macro_auc);
    for (const auto& [c, p] : s.class_auc) line("class_auc", std::to_string(c), p);
  }
  return os.str();
}

ClassExplanation tally_batch(const Schema& schema, int label, const GeneratedBatch& batch) {
  ClassExplanation e;
  e.label = label;
  e.generated = batch.samples.size();
  e.likelihood.assign(schema.size(), 0.0);
  e.histogram.assign(schema.size(), {});
  for (std::size_t i = 0; i < batch.samples.size(); ++i)
    for (std::size_t f : batch.changed.at(i)) {
      e.likelihood[f] += 1.0;
      ++e.histogram[f][batch.samples[i].features[f]];
    }
  if (e.generated > 0)
    for (auto& v : e.likelihood) v /= static_cast<double>(e.generated);
  return e;
}

namespace {

ExplainReport empty_explain(const Schema& schema) {
  ExplainReport r;
  for (const auto& f : schema.features) r.feature_names.push_back(f.name);
  return r;
}

ClassExplanation skipped(const Schema& schema, int c) {
  ClassExplanation e;
  e.label = c;
  e.likelihood.assign(schema.size(), 0.0);
  e.histogram.assign(schema.size(), {});
  e.note = "no source samples";
  return e;
}

}  // namespace

ExplainReport explain_plan(const Dataset& train, const GenerationPlan& plan, const GenerationModels& models,
                           std::size_t n_per_class, std::uint64_t seed) {
  const Schema& schema = train.schema();
  ExplainReport report = empty_explain(schema);
  const FeatureWeighting weighting =
      models.weighting ? *models.weighting
                       : compute_weighting(plan.weighting, train, models, plan.permutation_repeats,
                                           plan.importance_holdout, derive_seed(seed, 1));
  for (int c = schema.target.min_class; c <= schema.target.max_class; ++c) {
    auto it = train.class_index().find(c);
    if (it == train.class_index().end()) {
      report.classes.push_back(skipped(schema, c));
      continue;
    }
    const auto& members = it->second;
    GenerationPlan p = plan;
    p.count = n_per_class;
    p.selection = SelectionPolicy{};
    p.selection.kind = SelectionKind::rss;
    p.selection.k = CountRange::fixed(n_per_class);
    p.selection.sample_without_replacement = false;
    GenerationModels m = models;
    m.weighting = &weighting;
    GeneratedBatch batch = generate_batch(train.subset(members), p, m, derive_seed(seed, 100 + static_cast<std::uint64_t>(c)));
    for (auto& s : batch.source_index) s = members[s];
    report.classes.push_back(tally_batch(schema, c, batch));
  }
  return report;
}

ExplainReport explain_dgm(const DgmModel& model, const Dataset& train, std::size_t n_per_class, std::uint64_t seed) {
  const Schema& schema = train.schema();
  ExplainReport report = empty_explain(schema);
  DgmModel seeded = model;
  seeded.config.input_source = InputSource::selected_samples;
  for (int c = schema.target.min_class; c <= schema.target.max_class; ++c) {
    if (!train.class_index().count(c)) {
      report.classes.push_back(skipped(schema, c));
      continue;
    }
    const std::vector<int> targets(n_per_class, c);
    const auto batch = generate_dgm(seeded, train, n_per_class, &targets, derive_seed(seed, 100 + static_cast<std::uint64_t>(c)));
    auto e = tally_batch(schema, c, batch);
    if (model.config.input_source == InputSource::noise) e.note = "measured on sample-seeded decoding";
    report.classes.push_back(std::move(e));
  }
  return report;
}

nlohmann::json ExplainReport::to_json() const {
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : classes) {
    nlohmann::json hist = nlohmann::json::object();
    for (std::size_t f = 0; f < c.histogram.size(); ++f) {
      if (c.histogram[f].empty()) continue;
      nlohmann::json h = nlohmann::json::array();
      for (const auto& [v, n] : c.histogram[f]) h.push_back({v, n});
      hist[feature_names[f]] = h;
    }
    nlohmann::json j{{"class", c.label}, {"generated", c.generated}, {"likelihood", c.likelihood},
                     {"histogram", hist}};
    if (!c.note.empty()) j["note"] = c.note;
    cls.push_back(j);
  }
  return {{"format", "sedg-explain"}, {"features", feature_names}, {"classes", cls}};
}

std::string ExplainReport::likelihood_csv() const {
  std::ostringstream os;
  os << "class,feature,likelihood\n";
  for (const auto& c : classes) {
    if (c.generated == 0) continue;
    for (std::size_t f = 0; f < c.likelihood.size(); ++f)
      os << c.label << ',' << feature_names[f] << ',' << fmt(c.likelihood[f]) << '\n';
  }
  return os.str();
}

std::string ExplainReport::histogram_csv() const {
  std::ostringstream os;
  os << "class,feature,value,count\n";
  for (const auto& c : classes)
    for (std::size_t f = 0; f < c.histogram.size(); ++f)
      for (const auto& [v, n] : c.histogram[f]) os << c.label << ',' << feature_names[f] << ',' << fmt(v) << ',' << n << '\n';
  return os.str();
}

ExplainReport explain_experiment(const ExperimentConfig& cfg, const Dataset& data, std::size_t n_per_class) {
  const auto& m = cfg.method;
  const std::uint64_t seed = derive_seed(cfg.root_seed, 0xe0);
  if (m.kind == MethodKind::dgm) return explain_dgm(trial_dgm(m, data, derive_seed(seed, 1)), data, n_per_class, seed);
  if (m.kind != MethodKind::sedg) throw ConfigError("explain supports the sedg and dgm methods");
  auto proto = make_classifier(cfg.classifier, cfg.classifier_config, derive_seed(seed, 2));
  auto trained = proto->clone();
  trained->fit(data);
  const GenerationPlan plan = m.effective_plan(n_per_class);
  GenerationModels models;
  models.trained = trained.get();
  models.prototype = proto.get();
  models.embedder = sedg_embedder(m, plan, data, derive_seed(seed, 3), trained.get());
  return explain_plan(data, plan, models, n_per_class, seed);
}

GeneratedBatch generate_for_trial(const ExperimentConfig& cfg, const Dataset& data, std::size_t trial) {
  TrialData td = prepare_trial(cfg, data, trial);
  const auto& m = cfg.method;
  switch (m.kind) {
    case MethodKind::sedg: {
      auto base = td.prototype->clone();
      base->fit(td.train);
      const GenerationPlan plan = m.effective_plan(cfg.synthetic_count);
      GenerationModels models;
      models.trained = base.get();
      models.prototype = td.prototype.get();
      models.embedder = sedg_embedder(m, plan, td.train, derive_seed(td.seed, 4), base.get());
      return generate_batch(td.train, plan, models, derive_seed(derive_seed(td.seed, 5), 2));
    }
    case MethodKind::dgm:
      return generate_dgm(trial_dgm(m, td.train, derive_seed(td.seed, 4)), td.train, cfg.synthetic_count, nullptr,
                          derive_seed(td.seed, 5));
    case MethodKind::baseline: {
      const Dataset out = resample(td.train, m.baseline, derive_seed(td.seed, 3));
      GeneratedBatch b;
      std::vector<Sample> added;
      for (const auto& s : out.samples())
        if (s.synthetic) added.push_back(s);
      b.samples = td.train.with_samples(std::move(added));
      b.source_index.assign(b.samples.size(), kNoSource);
      b.changed.assign(b.samples.size(), {});
      b.noop.assign(b.samples.size(), false);
      return b;
    }
    case MethodKind::none:
    case MethodKind::embedding_preprocess: break;
  }
  throw ConfigError(std::string("method '") + to_string(m.kind) + "' does not generate samples");
}

}  // namespace sedg
