#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/data.hpp"
#include "sedg/modification.hpp"
#include "sedg/nn/models.hpp"
#include "sedg/nn/train.hpp"
#include "sedg/selection.hpp"

namespace sedg {

enum class DgmKind { gen_ae, gen_vae, gen_aae, gen_avae, gen_caae, gen_cavae };
enum class InputSource { noise, selected_samples };

const char* to_string(DgmKind k);
DgmKind dgm_kind_from_string(const std::string& s);
bool is_variational(DgmKind k);
bool is_adversarial(DgmKind k);
bool is_conditional(DgmKind k);

struct EarlyStopThresholds {
  /// Share of inputs that must reach `feature_overlap`.
  double majority_fraction = 0.5;
  /// Share of features an output must share with its input.
  double feature_overlap = 0.8;
};

struct DgmConfig {
  DgmKind kind = DgmKind::gen_ae;
  /// Weight of the adversarial term; reconstruction gets 1 - alpha.
  double alpha = 0.5;
  InputSource input_source = InputSource::selected_samples;
  /// Sample selection used for selected_samples input.
  SelectionPolicy selection;
  std::size_t label_embedding_dim = 4;
  bool early_stop = true;
  EarlyStopThresholds thresholds;
  /// Experimental: the discriminator reads the latent code against N(0, I)
  /// draws instead of decoded samples.
  bool latent_discriminator = false;
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> hidden{32, 16};
  std::size_t latent_dim = 8;
  std::vector<std::size_t> discriminator_hidden{32, 16};
  /// Epochs with discriminator accuracy 1.0 before a collapse warning.
  std::size_t collapse_patience = 5;

  void validate(const Schema& schema) const;
};

nlohmann::json to_json(const DgmConfig& c);
DgmConfig dgm_config_from_json(const nlohmann::json& j);

/// The three generator-loss terms of one batch.
struct GeneratorLoss {
  double total = 0.0;
  double adversarial = 0.0;
  /// Reconstruction loss, plus the KL term for variational generators.
  double reconstruction = 0.0;
};

/// Blended generator loss alpha * L_adv + (1 - alpha) * L_rec, where L_adv is
/// the sigmoid cross entropy of D(fake) against the "real" label. With
/// `backward` the gradients are accumulated into the generator's (and, as a
/// side effect, the discriminator's) parameters.
GeneratorLoss generator_loss(nn::TabularAutoencoder& generator, nn::Discriminator* disc, const Matrix& encoded,
                             const std::vector<int>* labels, const nn::PassOptions& opts, const Matrix* eps,
                             double alpha, bool latent_discriminator, bool backward);

/// Discriminator input for real rows: the one-hot layout of the generator output.
Matrix real_representation(const Schema& schema, const Matrix& encoded);

struct DgmHistory {
  std::vector<double> generator_loss;
  std::vector<double> discriminator_loss;
  std::vector<double> discriminator_accuracy;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
  bool discriminator_collapsed = false;
};

struct DgmModel {
  DgmConfig config;
  Schema schema;
  std::shared_ptr<nn::TabularAutoencoder> generator;
  std::shared_ptr<nn::Discriminator> discriminator;
  /// Per-dimension mean and standard deviation of the training latents,
  /// used to draw noise for non-variational generators.
  RowVector latent_mean;
  RowVector latent_std;
  /// Empirical class distribution of the training data.
  std::map<int, double> class_distribution;
  DgmHistory history;

  nlohmann::json to_json() const;
  static DgmModel from_json(const nlohmann::json& j);
};

DgmModel train_dgm(const Dataset& train, const DgmConfig& cfg, const nn::TrainConfig& tcfg);

/// Fraction of features equal between input and output rows (encoded
/// space): discrete codes must match, continuous values within one grid step.
std::vector<double> feature_overlap(const Schema& schema, const Matrix& inputs, const Matrix& outputs);
/// True iff the share of rows with overlap >= feature_overlap is >= majority_fraction.
bool early_stop_fires(const Schema& schema, const Matrix& inputs, const Matrix& outputs,
                      const EarlyStopThresholds& thresholds);
bool early_stop_check(const nn::TabularAutoencoder& generator, const Dataset& train,
                      const EarlyStopThresholds& thresholds);

/// `n_per_class` copies of each class in `classes`, grouped by class.
std::vector<int> per_class_targets(const std::set<int>& classes, std::size_t n_per_class);

/// Samples n outputs. Labels: `class_targets` when given (one per output);
/// otherwise the source labels for sample-seeded generation, or draws from
/// the training class distribution for unconditional noise generation.
/// Conditional noise generation requires class_targets. Unused source
/// indices (noise input) are recorded as kNoSource.
GeneratedBatch generate_dgm(const DgmModel& model, const Dataset& train, std::size_t n,
                            const std::vector<int>* class_targets, std::uint64_t seed);

inline constexpr std::size_t kNoSource = static_cast<std::size_t>(-1);

/// Trains `disc` to tell `real` (target 1) from `fake` (target 0) and
/// returns its final accuracy on both sets.
double fit_discriminator(nn::Discriminator& disc, const Matrix& real, const Matrix& fake, std::size_t epochs,
                         double learning_rate, std::uint64_t seed);

}  // namespace sedg
