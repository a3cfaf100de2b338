#include "sedg/dgm.hpp"

#include <algorithm>
#include <cmath>

#include "sedg/config.hpp"
#include "sedg/nn/optim.hpp"

namespace sedg {

const char* to_string(DgmKind k) {
  switch (k) {
    case DgmKind::gen_ae: return "gen_ae";
    case DgmKind::gen_vae: return "gen_vae";
    case DgmKind::gen_aae: return "gen_aae";
    case DgmKind::gen_avae: return "gen_avae";
    case DgmKind::gen_caae: return "gen_caae";
    case DgmKind::gen_cavae: return "gen_cavae";
  }
  return "?";
}

DgmKind dgm_kind_from_string(const std::string& s) {
  for (auto k : {DgmKind::gen_ae, DgmKind::gen_vae, DgmKind::gen_aae, DgmKind::gen_avae, DgmKind::gen_caae,
                 DgmKind::gen_cavae})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown generative model kind '" + s + "'");
}

bool is_variational(DgmKind k) {
  return k == DgmKind::gen_vae || k == DgmKind::gen_avae || k == DgmKind::gen_cavae;
}
bool is_adversarial(DgmKind k) {
  return k == DgmKind::gen_aae || k == DgmKind::gen_avae || k == DgmKind::gen_caae || k == DgmKind::gen_cavae;
}
bool is_conditional(DgmKind k) { return k == DgmKind::gen_caae || k == DgmKind::gen_cavae; }

void DgmConfig::validate(const Schema& schema) const {
  if (!(std::abs(alpha) <= 1.0)) throw ConfigError("alpha must satisfy |alpha| <= 1");
  if (is_conditional(kind) && label_embedding_dim < 1)
    throw ConfigError("conditional generators need label_embedding_dim >= 1");
  if (latent_dim < 1 || latent_dim >= schema.size())
    throw ConfigError("latent_dim must lie in [1, " + std::to_string(schema.size() - 1) + "]");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (thresholds.majority_fraction < 0.0 || thresholds.majority_fraction > 1.0 || thresholds.feature_overlap < 0.0 ||
      thresholds.feature_overlap > 1.0)
    throw ConfigError("early-stop thresholds must lie in [0, 1]");
  if (input_source == InputSource::selected_samples &&
      (selection.kind == SelectionKind::pess || selection.kind == SelectionKind::ppss))
    throw ConfigError("generative models accept rss or pass sample selection");
}

nlohmann::json to_json(const DgmConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"alpha", c.alpha},
          {"input_source", c.input_source == InputSource::noise ? "noise" : "selected_samples"},
          {"selection", to_json(c.selection)},
          {"label_embedding_dim", c.label_embedding_dim},
          {"early_stop",
           {{"enabled", c.early_stop},
            {"majority_fraction", c.thresholds.majority_fraction},
            {"feature_overlap", c.thresholds.feature_overlap}}},
          {"latent_discriminator", c.latent_discriminator},
          {"embedding_dim", c.embedding_dim},
          {"hidden", c.hidden},
          {"latent_dim", c.latent_dim},
          {"discriminator_hidden", c.discriminator_hidden},
          {"collapse_patience", c.collapse_patience}};
}

DgmConfig dgm_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"kind", "alpha", "input_source", "selection", "label_embedding_dim", "early_stop",
                 "latent_discriminator", "embedding_dim", "hidden", "latent_dim", "discriminator_hidden",
                 "collapse_patience"},
             "generative model config");
  DgmConfig c;
  if (j.contains("kind")) c.kind = dgm_kind_from_string(j["kind"].get<std::string>());
  c.alpha = get_or(j, "alpha", c.alpha);
  const auto src = get_or<std::string>(j, "input_source", "selected_samples");
  if (src == "noise") c.input_source = InputSource::noise;
  else if (src == "selected_samples") c.input_source = InputSource::selected_samples;
  else throw ConfigError("unknown input_source '" + src + "'");
  if (j.contains("selection")) c.selection = selection_policy_from_json(j["selection"]);
  c.label_embedding_dim = get_or(j, "label_embedding_dim", c.label_embedding_dim);
  if (j.contains("early_stop")) {
    const auto& e = j["early_stop"];
    if (e.is_boolean()) {
      c.early_stop = e.get<bool>();
    } else {
      check_keys(e, {"enabled", "majority_fraction", "feature_overlap"}, "early_stop");
      c.early_stop = get_or(e, "enabled", true);
      c.thresholds.majority_fraction = get_or(e, "majority_fraction", c.thresholds.majority_fraction);
      c.thresholds.feature_overlap = get_or(e, "feature_overlap", c.thresholds.feature_overlap);
    }
  }
  c.latent_discriminator = get_or(j, "latent_discriminator", c.latent_discriminator);
  c.embedding_dim = get_or(j, "embedding_dim", c.embedding_dim);
  c.hidden = get_or(j, "hidden", c.hidden);
  c.latent_dim = get_or(j, "latent_dim", c.latent_dim);
  c.discriminator_hidden = get_or(j, "discriminator_hidden", c.discriminator_hidden);
  c.collapse_patience = get_or(j, "collapse_patience", c.collapse_patience);
  if (!(std::abs(c.alpha) <= 1.0)) throw ConfigError("alpha must satisfy |alpha| <= 1");
  return c;
}

Matrix real_representation(const Schema& schema, const Matrix& encoded) {
  nn::OutputLayout layout(schema);
  Matrix out = Matrix::Zero(encoded.rows(), static_cast<Eigen::Index>(layout.total));
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto off = static_cast<Eigen::Index>(layout.offsets[f]);
    for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
      const double v = encoded(r, static_cast<Eigen::Index>(f));
      if (layout.discrete[f]) out(r, off + static_cast<Eigen::Index>(std::llround(v))) = 1.0;
      else out(r, off) = v;
    }
  }
  return out;
}

namespace {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = standard_normal(rng);
  return m;
}

std::size_t count_correct(const Matrix& logits, bool real) {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    if (real ? logits(i, 0) > 0.0 : logits(i, 0) < 0.0) ++n;
  return n;
}

struct DiscStep {
  double loss = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
};

// Accumulates discriminator gradients for one real/fake batch.
DiscStep discriminator_step(nn::Discriminator& disc, const Matrix& real, const Matrix& fake,
                            const std::vector<int>* labels) {
  DiscStep s;
  nn::Discriminator::Tape tr, tf;
  Matrix lr = disc.forward(real, labels, &tr);
  Matrix lf = disc.forward(fake, labels, &tf);
  Matrix dr, df;
  s.loss = nn::binary_cross_entropy_logits(lr, 1.0, &dr) + nn::binary_cross_entropy_logits(lf, 0.0, &df);
  disc.backward(tr, dr);
  disc.backward(tf, df);
  s.correct = count_correct(lr, true) + count_correct(lf, false);
  s.total = static_cast<std::size_t>(lr.rows() + lf.rows());
  return s;
}

}  // namespace

GeneratorLoss generator_loss(nn::TabularAutoencoder& generator, nn::Discriminator* disc, const Matrix& encoded,
                             const std::vector<int>* labels, const nn::PassOptions& opts, const Matrix* eps,
                             double alpha, bool latent_discriminator, bool backward) {
  const auto& layout = generator.layout();
  nn::TabularAutoencoder::Tape t;
  Matrix out = generator.forward(encoded, labels, opts, eps, &t);
  GeneratorLoss g;
  Matrix d_rec;
  g.reconstruction = nn::reconstruction_loss(layout, out, encoded, backward ? &d_rec : nullptr);
  if (generator.variational()) g.reconstruction += nn::gaussian_kl(t.mu, t.logvar);
  if (!disc) {
    g.total = g.reconstruction;
    if (backward) {
      generator.backward(t, d_rec, nullptr, generator.variational() ? 1.0 : 0.0);
      if (opts.phase == nn::Phase::train) generator.update_running(t);
    }
    return g;
  }
  const Matrix fake = latent_discriminator ? t.z : nn::soft_output(layout, out);
  const std::vector<int>* disc_labels = disc->conditional() ? labels : nullptr;
  nn::Discriminator::Tape dt;
  Matrix logits = disc->forward(fake, disc_labels, &dt);
  Matrix d_logit;
  g.adversarial = nn::binary_cross_entropy_logits(logits, 1.0, backward ? &d_logit : nullptr);
  g.total = alpha * g.adversarial + (1.0 - alpha) * g.reconstruction;
  if (backward) {
    Matrix d_fake = disc->backward(dt, d_logit);
    Matrix d_out = (1.0 - alpha) * d_rec;
    Matrix d_z;
    if (latent_discriminator) d_z = alpha * d_fake;
    else d_out += alpha * nn::soft_output_backward(layout, out, d_fake);
    generator.backward(t, d_out, latent_discriminator ? &d_z : nullptr,
                       generator.variational() ? 1.0 - alpha : 0.0);
    if (opts.phase == nn::Phase::train) generator.update_running(t);
  }
  return g;
}

std::vector<double> feature_overlap(const Schema& schema, const Matrix& inputs, const Matrix& outputs) {
  if (inputs.rows() != outputs.rows() || inputs.cols() != outputs.cols() ||
      static_cast<std::size_t>(inputs.cols()) != schema.size())
    throw std::invalid_argument("feature_overlap: shape mismatch");
  std::vector<double> frac(static_cast<std::size_t>(inputs.rows()), 0.0);
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    std::size_t same = 0;
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const auto c = static_cast<Eigen::Index>(f);
      const auto& spec = schema[f];
      if (spec.is_discrete()) {
        if (std::llround(inputs(r, c)) == std::llround(outputs(r, c))) ++same;
      } else {
        const double diff = std::abs(inputs(r, c) - outputs(r, c)) * (spec.max - spec.min);
        if (diff <= spec.step + 1e-9) ++same;
      }
    }
    frac[static_cast<std::size_t>(r)] = static_cast<double>(same) / static_cast<double>(schema.size());
  }
  return frac;
}

bool early_stop_fires(const Schema& schema, const Matrix& inputs, const Matrix& outputs,
                      const EarlyStopThresholds& thresholds) {
  const auto frac = feature_overlap(schema, inputs, outputs);
  if (frac.empty()) return false;
  std::size_t hits = 0;
  for (double f : frac)
    if (f >= thresholds.feature_overlap - 1e-12) ++hits;
  return static_cast<double>(hits) / static_cast<double>(frac.size()) >= thresholds.majority_fraction - 1e-12;
}

bool early_stop_check(const nn::TabularAutoencoder& generator, const Dataset& train,
                      const EarlyStopThresholds& thresholds) {
  const Matrix x = Encoder(train.schema()).encode(train);
  const auto labels = train.targets();
  const Matrix y = generator.reconstruct(x, generator.conditional() ? &labels : nullptr);
  return early_stop_fires(train.schema(), x, y, thresholds);
}

DgmModel train_dgm(const Dataset& train, const DgmConfig& cfg, const nn::TrainConfig& tcfg) {
  if (train.empty()) throw std::invalid_argument("train_dgm: empty training set");
  cfg.validate(train.schema());
  tcfg.validate();
  const Schema& schema = train.schema();
  const bool conditional = is_conditional(cfg.kind);
  const bool adversarial = is_adversarial(cfg.kind);

  DgmModel model;
  model.config = cfg;
  model.schema = schema;
  nn::AutoencoderConfig ac;
  ac.embedding_dim = cfg.embedding_dim;
  ac.hidden = cfg.hidden;
  ac.bottleneck = cfg.latent_dim;
  ac.variational = is_variational(cfg.kind);
  ac.label_embedding_dim = conditional ? cfg.label_embedding_dim : 0;
  ac.num_classes = train.num_classes();
  model.generator = std::make_shared<nn::TabularAutoencoder>(schema, ac, derive_seed(tcfg.seed, 11));
  auto& gen = *model.generator;
  if (adversarial) {
    nn::DiscriminatorConfig dc;
    dc.hidden = cfg.discriminator_hidden;
    dc.label_embedding_dim = conditional ? cfg.label_embedding_dim : 0;
    dc.num_classes = train.num_classes();
    const std::size_t in = cfg.latent_discriminator ? cfg.latent_dim : gen.layout().total;
    model.discriminator = std::make_shared<nn::Discriminator>(in, dc, derive_seed(tcfg.seed, 12));
  }

  const Matrix x = Encoder(schema).encode(train);
  const std::vector<int> y = train.targets();
  const Matrix real_rep = real_representation(schema, x);
  nn::Adam opt_g(gen.parameters(), tcfg.learning_rate);
  std::optional<nn::Adam> opt_d;
  if (adversarial) opt_d.emplace(model.discriminator->parameters(), tcfg.learning_rate);
  nn::PlateauScheduler sched(tcfg.plateau_patience, tcfg.plateau_factor);
  Rng rng(tcfg.seed);
  std::size_t perfect_streak = 0;
  auto& hist = model.history;

  for (std::size_t epoch = 0; epoch < tcfg.max_epochs; ++epoch) {
    double g_total = 0.0, d_total = 0.0;
    std::size_t rows = 0, correct = 0, judged = 0;
    for (const auto& batch : nn::make_batches(train.size(), tcfg.batch_size, rng)) {
      const Matrix xb = nn::take_rows(x, batch);
      const std::vector<int> yb = nn::take(y, batch);
      const std::vector<int>* lb = conditional ? &yb : nullptr;
      if (adversarial) {
        opt_d->zero_grad();
        nn::TabularAutoencoder::Tape t;
        Matrix out = gen.forward(xb, lb, nn::PassOptions::training(rng), nullptr, &t);
        const Matrix fake = cfg.latent_discriminator ? t.z : nn::soft_output(gen.layout(), out);
        const Matrix real = cfg.latent_discriminator
                                ? normal_matrix(xb.rows(), static_cast<Eigen::Index>(cfg.latent_dim), rng)
                                : nn::take_rows(real_rep, batch);
        const auto s = discriminator_step(*model.discriminator, real, fake, lb);
        if (!std::isfinite(s.loss)) throw TrainingDiverged("discriminator loss became non-finite at epoch " + std::to_string(epoch));
        opt_d->step();
        d_total += s.loss * static_cast<double>(batch.size());
        correct += s.correct;
        judged += s.total;
      }
      opt_g.zero_grad();
      const auto g = generator_loss(gen, model.discriminator.get(), xb, lb, nn::PassOptions::training(rng), nullptr,
                                    cfg.alpha, cfg.latent_discriminator, true);
      if (!std::isfinite(g.total))
        throw TrainingDiverged("generator loss became non-finite at epoch " + std::to_string(epoch));
      opt_g.step();
      g_total += g.total * static_cast<double>(batch.size());
      rows += batch.size();
    }
    const double g_mean = g_total / static_cast<double>(rows);
    hist.generator_loss.push_back(g_mean);
    if (adversarial) {
      hist.discriminator_loss.push_back(d_total / static_cast<double>(rows));
      const double acc = static_cast<double>(correct) / static_cast<double>(judged);
      hist.discriminator_accuracy.push_back(acc);
      perfect_streak = acc >= 1.0 ? perfect_streak + 1 : 0;
      if (perfect_streak >= cfg.collapse_patience && !hist.discriminator_collapsed) {
        hist.discriminator_collapsed = true;
        log_warning("discriminator accuracy pinned at 1.0 for " + std::to_string(perfect_streak) + " epochs");
      }
    }
    opt_g.set_learning_rate(sched.observe(g_mean, opt_g.learning_rate()));
    if (opt_d) opt_d->set_learning_rate(opt_g.learning_rate());
    hist.epochs_run = epoch + 1;
    if (cfg.early_stop && early_stop_check(gen, train, cfg.thresholds)) {
      hist.stopped_early = true;
      break;
    }
  }

  const Matrix z = gen.encode_mean(x, conditional ? &y : nullptr);
  model.latent_mean = z.colwise().mean();
  model.latent_std = ((z.rowwise() - model.latent_mean).array().square().colwise().sum() /
                      static_cast<double>(std::max<Eigen::Index>(1, z.rows() - 1)))
                         .sqrt()
                         .max(1e-6)
                         .matrix();
  for (const auto& [c, n] : class_distribution(train))
    model.class_distribution[c] = static_cast<double>(n) / static_cast<double>(train.size());
  return model;
}

std::vector<int> per_class_targets(const std::set<int>& classes, std::size_t n_per_class) {
  std::vector<int> out;
  for (int c : classes) out.insert(out.end(), n_per_class, c);
  return out;
}

GeneratedBatch generate_dgm(const DgmModel& model, const Dataset& train, std::size_t n,
                            const std::vector<int>* class_targets, std::uint64_t seed) {
  GeneratedBatch batch;
  batch.samples = train.with_samples({});
  if (n == 0) return batch;
  if (class_targets && class_targets->size() != n)
    throw std::invalid_argument("class_targets must hold one label per output");
  const auto& gen = *model.generator;
  const bool conditional = gen.conditional();
  Encoder enc(model.schema);
  Rng rng(derive_seed(seed, 0));

  std::vector<int> labels(n);
  std::vector<std::size_t> source(n, kNoSource);
  Matrix out;
  if (model.config.input_source == InputSource::noise) {
    if (class_targets) {
      labels = *class_targets;
    } else {
      if (conditional) throw std::invalid_argument("conditional noise generation needs class targets");
      std::vector<int> classes;
      std::vector<double> w;
      for (const auto& [c, p] : model.class_distribution) {
        classes.push_back(c);
        w.push_back(p);
      }
      for (auto& l : labels) l = classes[weighted_index(rng, w)];
    }
    Matrix z = normal_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(gen.latent_dim()), rng);
    if (!gen.variational()) {
      z = z.array().rowwise() * model.latent_std.array();
      z.rowwise() += model.latent_mean;
    }
    out = gen.decode_latent(z, conditional ? &labels : nullptr);
  } else {
    if (train.empty()) throw std::invalid_argument("sample-seeded generation needs training samples");
    if (class_targets) {
      for (std::size_t i = 0; i < n; ++i) {
        const int c = (*class_targets)[i];
        auto it = train.class_index().find(c);
        if (it == train.class_index().end())
          throw std::invalid_argument("no training samples of class " + std::to_string(c) + " to seed from");
        source[i] = it->second[uniform_index(rng, it->second.size())];
      }
    } else {
      SelectionPolicy policy = model.config.selection;
      policy.k = CountRange::fixed(n);
      if (policy.kind == SelectionKind::rss && n > train.size()) policy.sample_without_replacement = false;
      batch.pool = select_samples(train, policy, nullptr, derive_seed(seed, 1));
      if (batch.pool.indices.empty()) throw std::runtime_error("sample selection returned no samples");
      for (std::size_t i = 0; i < n; ++i) source[i] = batch.pool.indices[i % batch.pool.indices.size()];
    }
    for (std::size_t i = 0; i < n; ++i) labels[i] = class_targets ? (*class_targets)[i] : train[source[i]].target;
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.schema.size()));
    for (std::size_t i = 0; i < n; ++i) x.row(static_cast<Eigen::Index>(i)) = enc.encode_sample(train[source[i]]);
    const std::vector<int>* lp = conditional ? &labels : nullptr;
    if (gen.variational()) {
      const Matrix eps = normal_matrix(x.rows(), static_cast<Eigen::Index>(gen.latent_dim()), rng);
      out = gen.forward(x, lp, nn::PassOptions::evaluation(), &eps, nullptr);
    } else {
      out = gen.forward(x, lp, nn::PassOptions::evaluation(), nullptr, nullptr);
    }
  }

  const Matrix decoded = nn::decode_output(gen.layout(), out);
  std::vector<Sample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s = enc.decode_row(decoded.row(static_cast<Eigen::Index>(i)), labels[i]);
    s.synthetic = true;
    std::vector<std::size_t> changed;
    if (source[i] != kNoSource)
      for (std::size_t f = 0; f < model.schema.size(); ++f)
        if (s.features[f] != train[source[i]].features[f]) changed.push_back(f);
    const bool noop = source[i] != kNoSource && changed.empty();
    if (noop) ++batch.noop_count;
    batch.noop.push_back(noop);
    batch.changed.push_back(std::move(changed));
    batch.source_index.push_back(source[i]);
    samples.push_back(std::move(s));
  }
  batch.samples = train.with_samples(std::move(samples));
  return batch;
}

double fit_discriminator(nn::Discriminator& disc, const Matrix& real, const Matrix& fake, std::size_t epochs,
                         double learning_rate, std::uint64_t seed) {
  (void)seed;
  nn::Adam opt(disc.parameters(), learning_rate);
  DiscStep last;
  for (std::size_t e = 0; e < epochs; ++e) {
    opt.zero_grad();
    last = discriminator_step(disc, real, fake, nullptr);
    opt.step();
  }
  const std::size_t correct = count_correct(disc.forward(real, nullptr, nullptr), true) +
                              count_correct(disc.forward(fake, nullptr, nullptr), false);
  return static_cast<double>(correct) / static_cast<double>(real.rows() + fake.rows());
}

nlohmann::json DgmModel::to_json() const {
  nlohmann::json dist = nlohmann::json::object();
  for (const auto& [c, p] : class_distribution) dist[std::to_string(c)] = p;
  return {{"format", "sedg-generator"},
          {"version", 1},
          {"config", sedg::to_json(config)},
          {"schema", format_schema(schema)},
          {"generator", nn::to_checkpoint(*generator)},
          {"latent_mean", matrix_to_json(latent_mean)},
          {"latent_std", matrix_to_json(latent_std)},
          {"class_distribution", dist},
          {"history",
           {{"generator_loss", history.generator_loss},
            {"discriminator_loss", history.discriminator_loss},
            {"discriminator_accuracy", history.discriminator_accuracy},
            {"epochs_run", history.epochs_run},
            {"stopped_early", history.stopped_early},
            {"discriminator_collapsed", history.discriminator_collapsed}}}};
}

DgmModel DgmModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "sedg-generator") throw SchemaError("not a generator checkpoint");
  DgmModel m;
  m.config = dgm_config_from_json(j.at("config"));
  m.schema = parse_schema(j.at("schema").get<std::string>());
  m.generator = std::make_shared<nn::TabularAutoencoder>(nn::autoencoder_from_checkpoint(j.at("generator")));
  m.latent_mean = matrix_from_json(j.at("latent_mean")).row(0);
  m.latent_std = matrix_from_json(j.at("latent_std")).row(0);
  for (const auto& [c, p] : j.at("class_distribution").items()) m.class_distribution[std::stoi(c)] = p.get<double>();
  const auto& h = j.at("history");
  m.history.generator_loss = h.at("generator_loss").get<std::vector<double>>();
  m.history.discriminator_loss = h.at("discriminator_loss").get<std::vector<double>>();
  m.history.discriminator_accuracy = h.at("discriminator_accuracy").get<std::vector<double>>();
  m.history.epochs_run = h.at("epochs_run").get<std::size_t>();
  m.history.stopped_early = h.at("stopped_early").get<bool>();
  m.history.discriminator_collapsed = h.at("discriminator_collapsed").get<bool>();
  return m;
}

}  // namespace sedg
