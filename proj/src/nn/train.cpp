#include "sedg/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sedg/config.hpp"
#include "sedg/nn/optim.hpp"

namespace sedg::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
    throw std::invalid_argument("plateau_factor must lie in (0, 1)");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0)
    throw std::invalid_argument("validation_fraction must lie in [0, 1)");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"plateau_patience", c.plateau_patience},
          {"plateau_factor", c.plateau_factor}, {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},       {"seed", c.seed},
          {"validation_fraction", c.validation_fraction}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"learning_rate", "plateau_patience", "plateau_factor", "max_epochs", "batch_size", "seed",
                 "validation_fraction"},
             "train config");
  TrainConfig c;
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.plateau_patience = get_or(j, "plateau_patience", c.plateau_patience);
  c.plateau_factor = get_or(j, "plateau_factor", c.plateau_factor);
  c.max_epochs = get_or(j, "max_epochs", c.max_epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.seed = get_or(j, "seed", c.seed);
  c.validation_fraction = get_or(j, "validation_fraction", c.validation_fraction);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

nlohmann::json to_json(const NnModelConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : c.blocks) blocks.push_back({{"width", b.width}, {"dropout", b.dropout_rate}});
  return {{"embedding_dim", c.embedding_dim}, {"blocks", blocks}, {"output_classes", c.output_classes}};
}

NnModelConfig nn_config_from_json(const nlohmann::json& j) {
  check_keys(j, {"embedding_dim", "blocks", "output_classes"}, "nn model config");
  NnModelConfig c;
  c.embedding_dim = get_or(j, "embedding_dim", c.embedding_dim);
  c.output_classes = get_or(j, "output_classes", c.output_classes);
  if (j.contains("blocks")) {
    c.blocks.clear();
    for (const auto& b : j.at("blocks")) {
      check_keys(b, {"width", "dropout"}, "block");
      c.blocks.push_back({get_or<std::size_t>(b, "width", 64), get_or(b, "dropout", 0.25)});
    }
  }
  if (c.embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  for (const auto& b : c.blocks)
    if (b.width < 1 || b.dropout_rate < 0.0 || b.dropout_rate >= 1.0) throw ConfigError("invalid block configuration");
  return c;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle_in_place(order, rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<int> take(const std::vector<int>& v, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

namespace {

struct Holdout {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

Holdout make_holdout(std::size_t n, double fraction, Rng& rng) {
  Holdout h;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (n_val > 0 && n - n_val >= 2) {
    shuffle_in_place(order, rng);
    h.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    h.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(h.train.begin(), h.train.end());
  } else {
    h.train = order;
  }
  return h;
}

void check_finite(double loss, std::size_t epoch, const char* what) {
  if (!std::isfinite(loss))
    throw TrainingDiverged(std::string(what) + " loss became non-finite at epoch " + std::to_string(epoch));
}

// Shared epoch loop: `step(rows)` trains on one batch and returns its loss;
// `evaluate(rows)` returns the eval-mode loss on held-out rows.
TrainHistory run_epochs(std::size_t n, const TrainConfig& tcfg, Adam& opt, Rng& rng,
                        const std::function<double(const std::vector<std::size_t>&)>& step,
                        const std::function<double(const std::vector<std::size_t>&)>& evaluate,
                        const EpochCallback& on_epoch, const char* what) {
  tcfg.validate();
  TrainHistory hist;
  if (n == 0) throw std::invalid_argument(std::string(what) + ": empty training set");
  Holdout split = make_holdout(n, tcfg.validation_fraction, rng);
  PlateauScheduler sched(tcfg.plateau_patience, tcfg.plateau_factor);
  for (std::size_t epoch = 0; epoch < tcfg.max_epochs; ++epoch) {
    double total = 0.0;
    std::size_t rows = 0;
    for (const auto& local : make_batches(split.train.size(), tcfg.batch_size, rng)) {
      std::vector<std::size_t> batch;
      batch.reserve(local.size());
      for (auto i : local) batch.push_back(split.train[i]);
      opt.zero_grad();
      const double loss = step(batch);
      check_finite(loss, epoch, what);
      opt.step();
      total += loss * static_cast<double>(batch.size());
      rows += batch.size();
    }
    const double epoch_loss = total / static_cast<double>(rows);
    const double monitored = split.validation.empty() ? epoch_loss : evaluate(split.validation);
    check_finite(monitored, epoch, what);
    hist.epoch_loss.push_back(epoch_loss);
    hist.monitored_loss.push_back(monitored);
    hist.learning_rate.push_back(opt.learning_rate());
    opt.set_learning_rate(sched.observe(monitored, opt.learning_rate()));
    hist.epochs_run = epoch + 1;
    if (on_epoch && on_epoch(epoch, monitored)) {
      hist.stopped_early = true;
      break;
    }
  }
  return hist;
}

}  // namespace

TrainHistory fit_classifier(NnModel& model, const Matrix& x, const std::vector<int>& y,
                            const TrainConfig& tcfg) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("rows/targets mismatch");
  Rng rng(tcfg.seed);
  Adam opt(model.parameters(), tcfg.learning_rate);
  auto step = [&](const std::vector<std::size_t>& rows) {
    return model.loss_and_backward(take_rows(x, rows), take(y, rows), PassOptions::training(rng));
  };
  auto evaluate = [&](const std::vector<std::size_t>& rows) {
    return model.loss(take_rows(x, rows), take(y, rows), PassOptions::evaluation());
  };
  return run_epochs(static_cast<std::size_t>(x.rows()), tcfg, opt, rng, step, evaluate, {}, "classifier");
}

NnModel train_classifier(const Dataset& train, const NnModelConfig& cfg, const TrainConfig& tcfg,
                         TrainHistory* history) {
  if (train.empty()) throw std::invalid_argument("train_classifier: empty training set");
  NnModel model(train.schema(), cfg, derive_seed(tcfg.seed, 1));
  Encoder enc(train.schema());
  TrainHistory h = fit_classifier(model, enc.encode(train), train.targets(), tcfg);
  if (history) *history = std::move(h);
  return model;
}

TrainHistory fit_autoencoder(TabularAutoencoder& model, const Matrix& x, const std::vector<int>* labels,
                             const TrainConfig& tcfg, const EpochCallback& on_epoch) {
  Rng rng(tcfg.seed);
  Adam opt(model.parameters(), tcfg.learning_rate);
  std::vector<int> lab = labels ? *labels : std::vector<int>{};
  auto step = [&](const std::vector<std::size_t>& rows) {
    std::vector<int> l = take(lab, labels ? rows : std::vector<std::size_t>{});
    return model.loss_and_backward(take_rows(x, rows), labels ? &l : nullptr, PassOptions::training(rng));
  };
  auto evaluate = [&](const std::vector<std::size_t>& rows) {
    std::vector<int> l = take(lab, labels ? rows : std::vector<std::size_t>{});
    return model.loss(take_rows(x, rows), labels ? &l : nullptr, PassOptions::evaluation());
  };
  return run_epochs(static_cast<std::size_t>(x.rows()), tcfg, opt, rng, step, evaluate, on_epoch, "autoencoder");
}

TabularAutoencoder train_autoencoder(const Dataset& train, std::size_t bottleneck_dim,
                                     const TrainConfig& tcfg, TrainHistory* history,
                                     AutoencoderConfig base) {
  base.bottleneck = bottleneck_dim;
  base.variational = false;
  base.num_classes = train.num_classes();
  TabularAutoencoder model(train.schema(), base, derive_seed(tcfg.seed, 2));
  Encoder enc(train.schema());
  TrainHistory h = fit_autoencoder(model, enc.encode(train), nullptr, tcfg);
  if (history) *history = std::move(h);
  return model;
}

TabularAutoencoder train_vae(const Dataset& train, std::size_t latent_dim, const TrainConfig& tcfg,
                             TrainHistory* history, AutoencoderConfig base) {
  base.bottleneck = latent_dim;
  base.variational = true;
  base.num_classes = train.num_classes();
  TabularAutoencoder model(train.schema(), base, derive_seed(tcfg.seed, 3));
  Encoder enc(train.schema());
  TrainHistory h = fit_autoencoder(model, enc.encode(train), nullptr, tcfg);
  if (history) *history = std::move(h);
  return model;
}

GradientCheckResult gradient_check(const std::vector<Param*>& params,
                                   const std::function<double(bool)>& objective,
                                   std::size_t per_param, std::uint64_t seed, double h) {
  for (Param* p : params) p->zero_grad();
  objective(true);
  std::vector<Matrix> analytic;
  for (const Param* p : params) analytic.push_back(p->grad);

  Rng rng(seed);
  GradientCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    const auto size = static_cast<std::size_t>(p.value.size());
    std::vector<std::size_t> entries(size);
    std::iota(entries.begin(), entries.end(), 0);
    shuffle_in_place(entries, rng);
    entries.resize(std::min(per_param, size));
    for (std::size_t e : entries) {
      double& w = p.value.data()[e];
      const double orig = w;
      w = orig + h;
      const double up = objective(false);
      w = orig - h;
      const double down = objective(false);
      w = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k].data()[e];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.abs_error_at_worst = std::abs(a - numeric);
      }
      ++result.checked;
    }
  }
  for (Param* p : params) p->zero_grad();
  return result;
}

}  // namespace sedg::nn
