#pragma once

#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/data.hpp"
#include "sedg/nn/models.hpp"

namespace sedg::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t plateau_patience = 5;
  double plateau_factor = 0.1;
  std::size_t max_epochs = 60;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  /// Fraction of the rows held out to monitor the plateau scheduler. At 0
  /// the mean training loss of each epoch is monitored instead.
  double validation_fraction = 0.0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Missing keys keep their defaults; unknown keys raise ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NnModelConfig& c);
NnModelConfig nn_config_from_json(const nlohmann::json& j);

struct TrainHistory {
  std::vector<double> epoch_loss;
  std::vector<double> monitored_loss;
  std::vector<double> learning_rate;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
};

/// Called after each epoch with (epoch index, monitored loss); returning true stops training.
using EpochCallback = std::function<bool(std::size_t, double)>;

/// Trains an existing classifier network in place, so calling it again
/// continues from the current weights.
TrainHistory fit_classifier(NnModel& model, const Matrix& encoded, const std::vector<int>& targets,
                            const TrainConfig& tcfg);

NnModel train_classifier(const Dataset& train, const NnModelConfig& cfg, const TrainConfig& tcfg,
                         TrainHistory* history = nullptr);

TrainHistory fit_autoencoder(TabularAutoencoder& model, const Matrix& encoded,
                             const std::vector<int>* labels, const TrainConfig& tcfg,
                             const EpochCallback& on_epoch = {});

/// Autoencoder with the default hidden widths and the given bottleneck.
TabularAutoencoder train_autoencoder(const Dataset& train, std::size_t bottleneck_dim,
                                     const TrainConfig& tcfg, TrainHistory* history = nullptr,
                                     AutoencoderConfig base = {});
TabularAutoencoder train_vae(const Dataset& train, std::size_t latent_dim, const TrainConfig& tcfg,
                             TrainHistory* history = nullptr, AutoencoderConfig base = {});

/// Mini-batch index lists for one epoch; a trailing batch of one row is
/// merged into its predecessor so batch-norm always sees >= 2 rows.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows);
std::vector<int> take(const std::vector<int>& v, const std::vector<std::size_t>& rows);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  /// |a - n| at the entry with the largest relative error.
  double abs_error_at_worst = 0.0;
  std::size_t checked = 0;
};

/// Compares analytic gradients with central differences of step h on up to
/// `per_param` randomly chosen entries of every parameter.
/// `objective(true)` must return the loss and accumulate gradients into the
/// (zeroed) params; `objective(false)` only returns the loss. The relative
/// error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckResult gradient_check(const std::vector<Param*>& params,
                                   const std::function<double(bool)>& objective,
                                   std::size_t per_param, std::uint64_t seed, double h = 1e-5);

}  // namespace sedg::nn
