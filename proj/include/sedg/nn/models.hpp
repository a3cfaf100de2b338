#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/data.hpp"
#include "sedg/nn/layers.hpp"

namespace sedg::nn {

struct NnModelConfig {
  std::size_t embedding_dim = 8;
  std::vector<LrndBlockConfig> blocks{{128, 0.25}, {64, 0.25}, {32, 0.25}};
  int output_classes = 21;
};

/// Classifier network: per-feature embeddings, N LRND blocks, linear head, softmax.
class NnModel {
 public:
  NnModel(const Schema& schema, NnModelConfig cfg, std::uint64_t seed);

  struct Tape {
    Matrix input;
    Matrix embedded;
    std::vector<LrndBlock::Cache> blocks;
    Matrix hidden;
  };

  Matrix forward_logits(const Matrix& encoded, const PassOptions& opts, Tape* tape) const;
  /// Eval-mode class probabilities (dropout off, running batch-norm statistics).
  Matrix predict_proba(const Matrix& encoded) const;
  /// Concatenated per-feature embeddings phi(x).
  Matrix embed(const Matrix& encoded) const { return embedding.forward(encoded); }

  /// Mean cross entropy on (encoded, targets); accumulates parameter gradients.
  /// Running batch-norm statistics are updated only in the train phase.
  double loss_and_backward(const Matrix& encoded, const std::vector<int>& targets,
                           const PassOptions& opts);
  double loss(const Matrix& encoded, const std::vector<int>& targets, const PassOptions& opts) const;

  std::vector<Param*> parameters();
  const Schema& schema() const { return schema_; }
  const NnModelConfig& config() const { return cfg_; }

  FeatureEmbedding embedding;
  BlockStack trunk;
  Dense head;

 private:
  Schema schema_;
  NnModelConfig cfg_;
};

struct AutoencoderConfig {
  std::size_t embedding_dim = 8;
  /// Encoder widths; the decoder mirrors them.
  std::vector<std::size_t> hidden{32, 16};
  std::size_t bottleneck = 4;
  bool variational = false;
  double dropout = 0.0;
  /// > 0 makes the model conditional on the class label.
  std::size_t label_embedding_dim = 0;
  int num_classes = 21;
};

/// Column layout of the reconstruction output: one logit block per discrete
/// feature and one value column per continuous feature, in schema order.
struct OutputLayout {
  explicit OutputLayout(const Schema& schema);
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> widths;
  std::vector<bool> discrete;
  std::size_t total = 0;
};

/// Sum over features of per-head cross entropy (discrete) and squared error
/// (continuous), averaged over rows. Writes dL/d(out) when `d_out` is given.
double reconstruction_loss(const OutputLayout& layout, const Matrix& out, const Matrix& encoded,
                           Matrix* d_out);
/// Discrete heads through softmax, continuous columns passed through.
Matrix soft_output(const OutputLayout& layout, const Matrix& out);
/// Backpropagates a gradient on soft_output(out) to `out`.
Matrix soft_output_backward(const OutputLayout& layout, const Matrix& out, const Matrix& d_soft);
/// Encoded-space decoding: argmax code for discrete heads, clamp to [0, 1] for continuous.
Matrix decode_output(const OutputLayout& layout, const Matrix& out);

/// Autoencoder over tabular rows, optionally variational and/or conditional.
class TabularAutoencoder {
 public:
  TabularAutoencoder(const Schema& schema, AutoencoderConfig cfg, std::uint64_t seed);

  struct Tape {
    Matrix input;
    std::vector<int> labels;
    Matrix encoder_in;
    std::vector<LrndBlock::Cache> encoder;
    Matrix encoded_hidden;
    Matrix mu, logvar, eps, z;
    Matrix decoder_in;
    std::vector<LrndBlock::Cache> decoder;
    Matrix decoded_hidden;
    Matrix out;
  };

  /// Full pass returning raw output-layer values. For variational models
  /// z = mu + exp(logvar / 2) * eps; `eps` may be supplied to freeze the draw,
  /// otherwise it is drawn from opts.rng (or zero when no rng is given).
  Matrix forward(const Matrix& encoded, const std::vector<int>* labels, const PassOptions& opts,
                 const Matrix* eps, Tape* tape) const;
  /// Backpropagates d_out (and optionally an extra gradient on z) through
  /// the network. `kl_weight` adds the KL gradient for variational models.
  void backward(const Tape& tape, const Matrix& d_out, const Matrix* d_z_extra, double kl_weight);
  /// Finalises batch-norm running statistics after a train-phase forward.
  void update_running(const Tape& tape);

  /// Reconstruction loss plus KL (variational); gradients accumulated.
  double loss_and_backward(const Matrix& encoded, const std::vector<int>* labels,
                           const PassOptions& opts, const Matrix* eps = nullptr);
  double loss(const Matrix& encoded, const std::vector<int>* labels, const PassOptions& opts,
              const Matrix* eps = nullptr) const;

  /// Deterministic latent code: the bottleneck activation, or mu for a VAE.
  Matrix encode_mean(const Matrix& encoded, const std::vector<int>* labels = nullptr) const;
  /// Returns (mu, logvar); logvar is zero for a plain autoencoder.
  std::pair<Matrix, Matrix> encode_distribution(const Matrix& encoded,
                                                const std::vector<int>* labels = nullptr) const;
  /// Decoder output (raw) from latent codes.
  Matrix decode_latent(const Matrix& z, const std::vector<int>* labels = nullptr) const;
  /// Eval-mode reconstruction in encoded space.
  Matrix reconstruct(const Matrix& encoded, const std::vector<int>* labels = nullptr) const;

  std::vector<Param*> parameters();
  const Schema& schema() const { return schema_; }
  const AutoencoderConfig& config() const { return cfg_; }
  const OutputLayout& layout() const { return layout_; }
  bool conditional() const { return cfg_.label_embedding_dim > 0; }
  bool variational() const { return cfg_.variational; }
  std::size_t latent_dim() const { return cfg_.bottleneck; }

  FeatureEmbedding embedding;
  std::optional<Param> label_table;
  BlockStack encoder;
  Dense mu_head;
  std::optional<Dense> logvar_head;
  BlockStack decoder;
  Dense out_head;

 private:
  Matrix with_labels(const Matrix& x, const std::vector<int>* labels) const;

  Schema schema_;
  AutoencoderConfig cfg_;
  OutputLayout layout_;
};

struct DiscriminatorConfig {
  std::vector<std::size_t> hidden{32, 16};
  std::size_t label_embedding_dim = 0;
  int num_classes = 21;
};

/// Real-vs-fake scorer: Dense/ReLU stack with a single logit output.
class Discriminator {
 public:
  Discriminator(std::size_t input_dim, DiscriminatorConfig cfg, std::uint64_t seed);

  struct Tape {
    Matrix input;
    std::vector<int> labels;
    std::vector<Matrix> layer_in;
    std::vector<Matrix> pre;
  };

  Matrix forward(const Matrix& x, const std::vector<int>* labels, Tape* tape) const;
  /// Accumulates parameter gradients and returns dL/d(x).
  Matrix backward(const Tape& tape, const Matrix& d_logit);
  std::vector<Param*> parameters();
  std::size_t input_dim() const { return input_dim_; }
  bool conditional() const { return cfg_.label_embedding_dim > 0; }

  std::optional<Param> label_table;
  std::vector<Dense> layers;

 private:
  std::size_t input_dim_;
  DiscriminatorConfig cfg_;
};

/// Numerically stable sigmoid cross entropy for logits against 0/1 targets,
/// averaged over rows; writes dL/dlogit when requested.
double binary_cross_entropy_logits(const Matrix& logits, double target, Matrix* d_logits);

nlohmann::json params_to_json(const std::vector<const Param*>& params);
void params_from_json(const nlohmann::json& j, const std::vector<Param*>& params);

nlohmann::json to_checkpoint(const NnModel& m);
NnModel nn_model_from_checkpoint(const nlohmann::json& j);
nlohmann::json to_checkpoint(const TabularAutoencoder& m);
TabularAutoencoder autoencoder_from_checkpoint(const nlohmann::json& j);

}  // namespace sedg::nn
