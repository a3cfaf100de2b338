#include "sedg/embeddings.hpp"

#include <algorithm>
#include <cmath>

#include "sedg/config.hpp"

namespace sedg {

const char* to_string(EmbeddingSource s) {
  switch (s) {
    case EmbeddingSource::classifier_transfer: return "classifier_transfer";
    case EmbeddingSource::autoencoder_bottleneck: return "autoencoder_bottleneck";
    case EmbeddingSource::vae_latent: return "vae_latent";
    case EmbeddingSource::identity: return "identity";
  }
  return "?";
}

const char* to_string(Granularity g) { return g == Granularity::per_feature ? "per_feature" : "whole_sample"; }

EmbeddingSource embedding_source_from_string(const std::string& s) {
  if (s == "classifier_transfer" || s == "model") return EmbeddingSource::classifier_transfer;
  if (s == "autoencoder_bottleneck" || s == "ae") return EmbeddingSource::autoencoder_bottleneck;
  if (s == "vae_latent" || s == "vae") return EmbeddingSource::vae_latent;
  if (s == "identity") return EmbeddingSource::identity;
  throw ConfigError("unknown embedding source '" + s + "'");
}

Granularity granularity_from_string(const std::string& s) {
  if (s == "per_feature") return Granularity::per_feature;
  if (s == "whole_sample") return Granularity::whole_sample;
  throw ConfigError("unknown granularity '" + s + "'");
}

// ------------------------------------------------------------------- PCA

double Pca::explained_variance_ratio() const {
  if (total_variance <= 0.0) return 1.0;
  return explained_variance.sum() / total_variance;
}

Matrix Pca::transform(const Matrix& x) const { return (x.rowwise() - mean) * components; }

RowVector Pca::transform_row(const RowVector& x) const { return (x - mean) * components; }

Matrix Pca::inverse_transform(const Matrix& z) const {
  Matrix x = z * components.transpose();
  x.rowwise() += mean;
  return x;
}

Pca pca_fit(const Matrix& vectors, std::size_t k) {
  const auto dim = static_cast<std::size_t>(vectors.cols());
  if (k < 1 || k > dim) throw std::invalid_argument("pca_fit: k must lie in [1, dim]");
  if (vectors.rows() < 2) throw std::invalid_argument("pca_fit: need at least two vectors");
  Pca p;
  p.mean = vectors.colwise().mean();
  Matrix centered = vectors.rowwise() - p.mean;
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(vectors.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca_fit: eigen-decomposition failed");
  // Eigenvalues are ascending; keep the top k in descending order.
  const Vector& values = solver.eigenvalues();
  const Matrix& vecs = solver.eigenvectors();
  p.components.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(k));
  p.explained_variance.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto src = static_cast<Eigen::Index>(dim - 1 - i);
    Vector v = vecs.col(src);
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    p.components.col(static_cast<Eigen::Index>(i)) = v;
    p.explained_variance(static_cast<Eigen::Index>(i)) = std::max(0.0, values(src));
  }
  p.total_variance = std::max(0.0, values.sum());
  return p;
}

Pca pca_fit_variance(const Matrix& vectors, double threshold) {
  const auto dim = static_cast<std::size_t>(vectors.cols());
  Pca full = pca_fit(vectors, dim);
  std::size_t k = dim;
  if (full.total_variance > 0.0) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      acc += full.explained_variance(static_cast<Eigen::Index>(i));
      if (acc / full.total_variance >= threshold - 1e-12) {
        k = i + 1;
        break;
      }
    }
  } else {
    k = 1;
  }
  Pca p = full;
  p.components = full.components.leftCols(static_cast<Eigen::Index>(k));
  p.explained_variance = full.explained_variance.head(static_cast<Eigen::Index>(k));
  return p;
}

nlohmann::json to_json(const Pca& p) {
  return {{"mean", matrix_to_json(p.mean)},
          {"components", matrix_to_json(p.components)},
          {"explained_variance", matrix_to_json(p.explained_variance)},
          {"total_variance", p.total_variance}};
}

Pca pca_from_json(const nlohmann::json& j) {
  Pca p;
  p.mean = matrix_from_json(j.at("mean")).row(0);
  p.components = matrix_from_json(j.at("components"));
  p.explained_variance = matrix_from_json(j.at("explained_variance")).col(0);
  p.total_variance = j.at("total_variance").get<double>();
  return p;
}

double cosine_similarity(const RowVector& a, const RowVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::size_t nearest_neighbor(const RowVector& query, const Matrix& candidates) {
  if (candidates.rows() == 0) throw std::invalid_argument("nearest_neighbor: no candidates");
  if (candidates.cols() != query.size()) throw std::invalid_argument("nearest_neighbor: dimension mismatch");
  std::size_t best = 0;
  double best_d = (candidates.row(0) - query).squaredNorm();
  for (Eigen::Index i = 1; i < candidates.rows(); ++i) {
    const double d = (candidates.row(i) - query).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

// -------------------------------------------------------------- Embedder

std::size_t Embedder::dim() const {
  switch (source_) {
    case EmbeddingSource::classifier_transfer: return classifier_->embedding.out_dim();
    case EmbeddingSource::autoencoder_bottleneck:
    case EmbeddingSource::vae_latent: return autoencoder_->latent_dim();
    case EmbeddingSource::identity: return schema_.size();
  }
  return 0;
}

std::size_t Embedder::feature_dim() const {
  if (source_ != EmbeddingSource::classifier_transfer)
    throw UnsupportedError("per-feature embeddings exist only for classifier transfer");
  return classifier_->embedding.dim();
}

Matrix Embedder::embed(const Matrix& x) const {
  switch (source_) {
    case EmbeddingSource::classifier_transfer: return classifier_->embed(x);
    case EmbeddingSource::autoencoder_bottleneck:
    case EmbeddingSource::vae_latent: return autoencoder_->encode_mean(x);
    case EmbeddingSource::identity: return x;
  }
  return x;
}

RowVector Embedder::embed_row(const RowVector& x) const { return embed(Matrix(x)).row(0); }

RowVector Embedder::embed_value(std::size_t feature, double v) const {
  if (granularity_ != Granularity::per_feature || source_ != EmbeddingSource::classifier_transfer)
    throw UnsupportedError("embedder does not provide per-feature embeddings");
  return classifier_->embedding.embed_value(feature, v);
}

void Embedder::fit_pca(const Matrix& encoded_train, std::size_t k) {
  auto fit = [&](const Matrix& vectors) {
    if (vectors.rows() < 2) {
      // Single value: identity projection around that value.
      Pca p;
      p.mean = vectors.row(0);
      p.components = Matrix::Identity(vectors.cols(), vectors.cols());
      p.explained_variance = Vector::Zero(vectors.cols());
      return p;
    }
    if (k == 0) return pca_fit_variance(vectors, 0.95);
    return pca_fit(vectors, std::min<std::size_t>(k, static_cast<std::size_t>(vectors.cols())));
  };
  if (granularity_ == Granularity::whole_sample) {
    sample_pca_ = fit(embed(encoded_train));
    return;
  }
  feature_pca_.clear();
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const auto& spec = schema_[f];
    std::vector<double> values;
    if (spec.is_discrete()) {
      for (std::size_t c = 0; c < spec.cardinality(); ++c) values.push_back(static_cast<double>(c));
    } else {
      const auto steps = static_cast<std::size_t>(std::llround((spec.max - spec.min) / spec.step));
      const std::size_t points = std::min<std::size_t>(steps, 200);
      for (std::size_t i = 0; i <= points; ++i) values.push_back(static_cast<double>(i) / static_cast<double>(points));
    }
    Matrix vecs(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(feature_dim()));
    for (std::size_t i = 0; i < values.size(); ++i) vecs.row(static_cast<Eigen::Index>(i)) = embed_value(f, values[i]);
    feature_pca_.push_back(fit(vecs));
  }
}

RowVector Embedder::reduced_row(const RowVector& x) const {
  if (!sample_pca_) throw std::logic_error("whole-sample PCA has not been fitted");
  return sample_pca_->transform_row(embed_row(x));
}

RowVector Embedder::reduced_value(std::size_t feature, double v) const {
  if (feature_pca_.empty()) throw std::logic_error("per-feature PCA has not been fitted");
  return feature_pca_.at(feature).transform_row(embed_value(feature, v));
}

nlohmann::json Embedder::to_json() const {
  nlohmann::json j{{"source", sedg::to_string(source_)},
                   {"granularity", sedg::to_string(granularity_)},
                   {"schema", format_schema(schema_)}};
  if (classifier_) j["model"] = nn::to_checkpoint(*classifier_);
  if (autoencoder_) j["model"] = nn::to_checkpoint(*autoencoder_);
  if (sample_pca_) j["pca"] = sedg::to_json(*sample_pca_);
  if (!feature_pca_.empty()) {
    j["feature_pca"] = nlohmann::json::array();
    for (const auto& p : feature_pca_) j["feature_pca"].push_back(sedg::to_json(p));
  }
  return j;
}

Embedder Embedder::from_json(const nlohmann::json& j) {
  const EmbeddingSource src = embedding_source_from_string(j.at("source").get<std::string>());
  const Granularity g = granularity_from_string(j.at("granularity").get<std::string>());
  Embedder e;
  switch (src) {
    case EmbeddingSource::classifier_transfer:
      e = from_classifier(std::make_shared<const nn::NnModel>(nn::nn_model_from_checkpoint(j.at("model"))), g);
      break;
    case EmbeddingSource::autoencoder_bottleneck:
    case EmbeddingSource::vae_latent:
      e = from_autoencoder(
          std::make_shared<const nn::TabularAutoencoder>(nn::autoencoder_from_checkpoint(j.at("model"))), g);
      break;
    case EmbeddingSource::identity: e = identity(parse_schema(j.at("schema").get<std::string>())); break;
  }
  if (j.contains("pca")) e.sample_pca_ = pca_from_json(j["pca"]);
  if (j.contains("feature_pca"))
    for (const auto& p : j["feature_pca"]) e.feature_pca_.push_back(pca_from_json(p));
  return e;
}

Embedder Embedder::from_classifier(std::shared_ptr<const nn::NnModel> model, Granularity g) {
  if (!model) throw std::invalid_argument("null classifier model");
  Embedder e;
  e.source_ = EmbeddingSource::classifier_transfer;
  e.granularity_ = g;
  e.schema_ = model->schema();
  e.classifier_ = std::move(model);
  return e;
}

Embedder Embedder::from_autoencoder(std::shared_ptr<const nn::TabularAutoencoder> model, Granularity g) {
  if (!model) throw std::invalid_argument("null autoencoder model");
  if (g == Granularity::per_feature)
    throw UnsupportedError("autoencoder embeddings map whole samples; per_feature granularity is unsupported");
  if (model->conditional())
    throw UnsupportedError("conditional autoencoders cannot be exported as embedders");
  Embedder e;
  e.source_ = model->variational() ? EmbeddingSource::vae_latent : EmbeddingSource::autoencoder_bottleneck;
  e.granularity_ = g;
  e.schema_ = model->schema();
  e.autoencoder_ = std::move(model);
  return e;
}

Embedder Embedder::identity(const Schema& schema) {
  Embedder e;
  e.source_ = EmbeddingSource::identity;
  e.granularity_ = Granularity::whole_sample;
  e.schema_ = schema;
  return e;
}

Embedder export_embedder(std::shared_ptr<const nn::NnModel> model, EmbeddingSource source, Granularity g) {
  if (source != EmbeddingSource::classifier_transfer)
    throw UnsupportedError(std::string("a classifier cannot export a '") + to_string(source) + "' embedding");
  return Embedder::from_classifier(std::move(model), g);
}

Embedder export_embedder(std::shared_ptr<const nn::TabularAutoencoder> model, EmbeddingSource source,
                         Granularity g) {
  if (source == EmbeddingSource::classifier_transfer || source == EmbeddingSource::identity)
    throw UnsupportedError(std::string("an autoencoder cannot export a '") + to_string(source) + "' embedding");
  if (g == Granularity::per_feature)
    throw UnsupportedError("autoencoder embeddings map whole samples; per_feature granularity is unsupported");
  const bool wants_vae = source == EmbeddingSource::vae_latent;
  if (model && wants_vae != model->variational())
    throw UnsupportedError(wants_vae ? "model is not variational" : "model is variational; use vae_latent");
  return Embedder::from_autoencoder(std::move(model), g);
}

}  // namespace sedg
