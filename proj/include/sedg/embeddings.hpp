#pragma once

#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/data.hpp"
#include "sedg/nn/models.hpp"

namespace sedg {

enum class EmbeddingSource { classifier_transfer, autoencoder_bottleneck, vae_latent, identity };
enum class Granularity { per_feature, whole_sample };

const char* to_string(EmbeddingSource s);
const char* to_string(Granularity g);
EmbeddingSource embedding_source_from_string(const std::string& s);
Granularity granularity_from_string(const std::string& s);

/// Principal-component projection: z = (x - mean) * components.
struct Pca {
  RowVector mean;
  /// dim x k, orthonormal columns ordered by decreasing variance.
  Matrix components;
  /// Variance captured by each kept component.
  Vector explained_variance;
  double total_variance = 0.0;

  std::size_t input_dim() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t k() const { return static_cast<std::size_t>(components.cols()); }
  double explained_variance_ratio() const;
  Matrix transform(const Matrix& x) const;
  RowVector transform_row(const RowVector& x) const;
  Matrix inverse_transform(const Matrix& z) const;
};

/// Top-k principal components of the rows of `vectors` (covariance with n - 1).
/// Requires 1 <= k <= dim and at least two rows.
Pca pca_fit(const Matrix& vectors, std::size_t k);
/// Smallest k reaching `threshold` explained variance, capped at the dimension.
Pca pca_fit_variance(const Matrix& vectors, double threshold = 0.95);

nlohmann::json to_json(const Pca& p);
Pca pca_from_json(const nlohmann::json& j);

/// dot(a, b) / (|a| |b|); 0 when either vector is zero.
double cosine_similarity(const RowVector& a, const RowVector& b);
/// Index of the candidate row with minimal Euclidean distance; ties go to the lowest index.
std::size_t nearest_neighbor(const RowVector& query, const Matrix& candidates);

/// Deterministic mapping from encoded samples (or single feature values)
/// into an embedding space, exported from a trained model.
class Embedder {
 public:
  EmbeddingSource source() const { return source_; }
  Granularity granularity() const { return granularity_; }
  /// Width of the whole-sample embedding.
  std::size_t dim() const;
  /// Width of one per-feature embedding.
  std::size_t feature_dim() const;

  /// Whole-sample embedding of encoded rows. For classifier transfer this
  /// is the concatenation of the per-feature embeddings.
  Matrix embed(const Matrix& encoded) const;
  RowVector embed_row(const RowVector& encoded) const;
  /// Per-feature embedding of one encoded value; classifier transfer only.
  RowVector embed_value(std::size_t feature, double encoded_value) const;

  /// Fits PCA reductions. Whole-sample: on embeddings of `encoded_train`.
  /// Per-feature: on each feature's value embeddings (discrete: every code;
  /// continuous: up to 201 points of the step lattice). k = 0 picks the
  /// smallest k with >= 95% explained variance.
  void fit_pca(const Matrix& encoded_train, std::size_t k = 0);
  bool has_pca() const { return sample_pca_.has_value() || !feature_pca_.empty(); }
  const std::optional<Pca>& sample_pca() const { return sample_pca_; }
  const std::vector<Pca>& feature_pca() const { return feature_pca_; }
  /// Embedding followed by the fitted projection.
  RowVector reduced_row(const RowVector& encoded) const;
  RowVector reduced_value(std::size_t feature, double encoded_value) const;

  const Schema& schema() const { return schema_; }

  nlohmann::json to_json() const;
  static Embedder from_json(const nlohmann::json& j);

  static Embedder from_classifier(std::shared_ptr<const nn::NnModel> model, Granularity g);
  static Embedder from_autoencoder(std::shared_ptr<const nn::TabularAutoencoder> model, Granularity g);
  /// Whole-sample embedding equal to the encoded row itself.
  static Embedder identity(const Schema& schema);

 private:
  EmbeddingSource source_ = EmbeddingSource::identity;
  Granularity granularity_ = Granularity::whole_sample;
  Schema schema_;
  std::shared_ptr<const nn::NnModel> classifier_;
  std::shared_ptr<const nn::TabularAutoencoder> autoencoder_;
  std::optional<Pca> sample_pca_;
  std::vector<Pca> feature_pca_;
};

/// Exports the embedding part of a trained model.
/// Throws UnsupportedError for per-feature granularity on autoencoders.
Embedder export_embedder(std::shared_ptr<const nn::NnModel> model, EmbeddingSource source, Granularity g);
Embedder export_embedder(std::shared_ptr<const nn::TabularAutoencoder> model, EmbeddingSource source,
                         Granularity g);

}  // namespace sedg
