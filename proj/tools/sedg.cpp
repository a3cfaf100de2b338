#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sedg/bench.hpp"
#include "sedg/config.hpp"

namespace fs = std::filesystem;
using namespace sedg;

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) std::cout << text;
  else write_text(out, text);
}

struct Loaded {
  ExperimentConfig cfg;
  Dataset data;
};

Loaded load(const std::string& config_path, std::size_t threads) {
  Loaded l;
  l.cfg = load_experiment_config(config_path);
  if (threads) l.cfg.threads = threads;
  l.data = load_dataset(l.cfg.dataset, fs::path(config_path).parent_path());
  return l;
}

void print_summary(const std::string& label, const PiSummary& s) {
  std::cout << label << "  accuracy max " << s.accuracy.max << " mean " << s.accuracy.mean << " std "
            << s.accuracy.std << " | macro_auc max " << s.macro_auc.max << " mean " << s.macro_auc.mean << " std "
            << s.macro_auc.std << " (" << s.accuracy.n << " trials)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding-guided synthetic sample generation for imbalanced tables"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  std::string data_path, schema_path = "student", out, config, in_path, out_dir, what = "classifier";
  bool no_period = false;
  std::size_t trial = 0, threads = 0, per_class = 100;

  auto* ingest = app.add_subcommand("ingest", "Validate a CSV against a schema and summarise it");
  ingest->add_option("--data", data_path, "CSV file")->required();
  ingest->add_option("--schema", schema_path, "Schema file or 'student'");
  ingest->add_flag("--no-period-grades", no_period, "Drop G1/G2");
  ingest->add_option("--out", out, "Write the normalised CSV here");

  auto* train = app.add_subcommand("train", "Fit a classifier, generator or embedder on the whole dataset");
  train->add_option("--config", config, "Experiment config")->required();
  train->add_option("--what", what, "classifier, generator or embedding")
      ->check(CLI::IsMember({"classifier", "generator", "embedding"}));
  train->add_option("--out", out, "Checkpoint path")->required();

  auto* generate = app.add_subcommand("generate", "Write the synthetic samples of one trial");
  generate->add_option("--config", config, "Experiment config")->required();
  generate->add_option("--trial", trial, "Trial index");
  generate->add_option("--out", out, "CSV path (stdout when omitted)");

  std::string csv_out;
  auto* bench = app.add_subcommand("benchmark", "Run the trial loop of one experiment");
  bench->add_option("--config", config, "Experiment config")->required();
  bench->add_option("--out", out, "Report JSON (stdout when omitted)");
  bench->add_option("--csv", csv_out, "Per-trial PI CSV");
  bench->add_option("--threads", threads, "Worker threads");

  auto* grid = app.add_subcommand("grid", "Run several methods on a shared base experiment");
  grid->add_option("--config", config, "Grid config")->required();
  grid->add_option("--out-dir", out_dir, "Output directory")->required();
  grid->add_option("--threads", threads, "Worker threads");

  auto* explain = app.add_subcommand("explain", "Per-class modification likelihoods of a method");
  explain->add_option("--config", config, "Experiment config")->required();
  explain->add_option("--per-class", per_class, "Samples per class");
  explain->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Recompute and print the summary of a report");
  report->add_option("--in", in_path, "Report JSON")->required();
  report->add_option("--csv", csv_out, "Write the per-trial PI CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  set_warnings_enabled(!quiet);

  try {
    if (ingest->parsed()) {
      DatasetConfig dc;
      dc.path = data_path;
      dc.schema = schema_path;
      dc.include_period_grades = !no_period;
      const Dataset d = load_dataset(dc);
      nlohmann::json dist = nlohmann::json::object();
      for (const auto& [c, n] : class_distribution(d)) dist[std::to_string(c)] = n;
      std::cout << nlohmann::json{{"rows", d.size()}, {"features", d.num_features()}, {"classes", dist}}.dump(2)
                << '\n';
      if (!out.empty()) write_csv(out, d);
    } else if (train->parsed()) {
      auto l = load(config, 0);
      const auto seed = derive_seed(l.cfg.root_seed, 0x7a);
      nlohmann::json ckpt;
      if (what == "classifier") {
        auto c = make_classifier(l.cfg.classifier, l.cfg.classifier_config, seed);
        c->fit(l.data);
        ckpt = c->to_json();
      } else if (what == "generator") {
        if (l.cfg.method.kind != MethodKind::dgm) throw ConfigError("--what generator needs a dgm method");
        nn::TrainConfig t = l.cfg.method.dgm_train;
        t.seed = seed;
        ckpt = train_dgm(l.data, l.cfg.method.dgm, t).to_json();
      } else {
        ckpt = build_embedder(l.data, l.cfg.method.embedding, true, seed)->to_json();
      }
      write_text(out, ckpt.dump() + "\n");
    } else if (generate->parsed()) {
      auto l = load(config, 0);
      const auto batch = generate_for_trial(l.cfg, l.data, trial);
      emit(out, format_csv(batch.samples, &batch.source_index));
    } else if (bench->parsed()) {
      auto l = load(config, threads);
      const auto r = run_experiment(l.cfg, l.data);
      emit(out, r.to_json().dump(2) + "\n");
      if (!csv_out.empty()) write_text(csv_out, trials_csv(r));
      if (!out.empty()) print_summary(r.name, r.summary);
    } else if (grid->parsed()) {
      GridConfig g = grid_config_from_json(read_json(config));
      if (threads) g.base.threads = threads;
      const Dataset data = load_dataset(g.base.dataset, fs::path(config).parent_path());
      const auto result = run_grid(g, data);
      write_text(fs::path(out_dir) / "grid.json", result.to_json().dump(2) + "\n");
      write_text(fs::path(out_dir) / "grid.csv", result.csv());
      for (const auto& row : result.rows) {
        if (row.report) {
          write_text(fs::path(out_dir) / (row.label + ".json"), row.report->to_json().dump(2) + "\n");
          print_summary(row.label, row.report->summary);
        } else {
          std::cout << row.label << "  failed: " << row.error << '\n';
        }
      }
    } else if (explain->parsed()) {
      auto l = load(config, 0);
      const auto r = explain_experiment(l.cfg, l.data, per_class);
      write_text(fs::path(out_dir) / "explain.json", r.to_json().dump(2) + "\n");
      write_text(fs::path(out_dir) / "likelihood.csv", r.likelihood_csv());
      write_text(fs::path(out_dir) / "histogram.csv", r.histogram_csv());
    } else if (report->parsed()) {
      const auto j = read_json(in_path);
      const auto r = ExperimentReport::from_json(j);
      if (j.at("summary") != to_json(r.summary)) {
        std::cerr << "error: stored summary does not match the per-trial records\n";
        return kRuntimeError;
      }
      print_summary(r.name, r.summary);
      for (const auto& [c, s] : r.summary.class_auc)
        std::cout << "  class " << c << " auc PI max " << s.max << " mean " << s.mean << '\n';
      if (!csv_out.empty()) write_text(csv_out, trials_csv(r));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
