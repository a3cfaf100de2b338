#pragma once

#include <string>
#include <vector>

#include "sedg/common.hpp"
#include "sedg/data.hpp"

namespace sedg::nn {

/// A trainable tensor and its accumulated gradient.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

enum class Phase { train, eval };

/// Controls one forward pass. In the train phase batch-norm uses batch
/// statistics and dropout is active when `dropout` is set.
struct PassOptions {
  Phase phase = Phase::eval;
  bool dropout = true;
  Rng* rng = nullptr;

  static PassOptions training(Rng& rng) { return {Phase::train, true, &rng}; }
  static PassOptions evaluation() { return {Phase::eval, false, nullptr}; }
  bool dropout_active() const { return phase == Phase::train && dropout && rng != nullptr; }
};

class Dense {
 public:
  Dense() = default;
  Dense(std::size_t in, std::size_t out, Rng& rng, const std::string& name);

  Matrix forward(const Matrix& x) const;
  /// Accumulates weight gradients from (x, dy) and returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy);

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.value.rows()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.value.cols()); }

  Param weight;  // in x out
  Param bias;    // 1 x out
};

class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::size_t width, const std::string& name);

  struct Cache {
    Matrix xhat;
    RowVector inv_std;
    RowVector batch_mean;
    RowVector batch_var;
    bool batch_stats = false;
  };

  Matrix forward(const Matrix& x, Phase phase, Cache* cache) const;
  Matrix backward(const Matrix& dy, const Cache& cache);
  /// Exponential moving update of the running statistics from a train-phase cache.
  void update_running(const Cache& cache, std::size_t batch_rows);

  Param gamma;
  Param beta;
  RowVector running_mean;
  RowVector running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

struct LrndBlockConfig {
  std::size_t width = 64;
  double dropout_rate = 0.25;
};

/// Linear -> ReLU -> batch normalisation -> dropout.
class LrndBlock {
 public:
  LrndBlock() = default;
  LrndBlock(std::size_t in, const LrndBlockConfig& cfg, Rng& rng, const std::string& name);

  struct Cache {
    Matrix input;
    Matrix pre_activation;
    BatchNorm::Cache bn;
    Matrix dropout_mask;
  };

  Matrix forward(const Matrix& x, const PassOptions& opts, Cache* cache) const;
  Matrix backward(const Matrix& dy, const Cache& cache);
  void update_running(const Cache& cache) { bn.update_running(cache.bn, static_cast<std::size_t>(cache.input.rows())); }
  void collect(std::vector<Param*>& out);

  std::size_t width() const { return linear.out_dim(); }

  Dense linear;
  BatchNorm bn;
  double dropout_rate = 0.0;
};

/// Stack of LRND blocks.
class BlockStack {
 public:
  BlockStack() = default;
  BlockStack(std::size_t in, const std::vector<LrndBlockConfig>& cfgs, Rng& rng, const std::string& name);

  Matrix forward(const Matrix& x, const PassOptions& opts, std::vector<LrndBlock::Cache>* caches) const;
  Matrix backward(const Matrix& dy, const std::vector<LrndBlock::Cache>& caches);
  void update_running(const std::vector<LrndBlock::Cache>& caches);
  void collect(std::vector<Param*>& out);
  std::size_t out_dim(std::size_t in) const { return blocks.empty() ? in : blocks.back().width(); }

  std::vector<LrndBlock> blocks;
};

/// Per-feature input embedding. Discrete features look up a row of a
/// |values| x dim table; continuous features map their scaled value v to
/// v * w + b with learned row vectors w, b.
class FeatureEmbedding {
 public:
  FeatureEmbedding() = default;
  FeatureEmbedding(const Schema& schema, std::size_t dim, Rng& rng);

  std::size_t dim() const { return dim_; }
  std::size_t num_features() const { return kinds_.size(); }
  std::size_t out_dim() const { return dim_ * kinds_.size(); }

  /// encoded: n x F as produced by Encoder::encode.
  Matrix forward(const Matrix& encoded) const;
  void backward(const Matrix& encoded, const Matrix& dy);
  /// Embedding of one (encoded) value of feature f.
  RowVector embed_value(std::size_t f, double encoded_value) const;
  void collect(std::vector<Param*>& out);

  /// For discrete f the table; for continuous f a 2 x dim matrix [w; b].
  std::vector<Param> tables;

 private:
  std::vector<FeatureKind> kinds_;
  std::size_t dim_ = 0;
};

/// Row-wise softmax, numerically stabilised.
Matrix softmax_rows(const Matrix& logits);

/// Mean over rows of -sum_c p(c) log q(c), with q clamped at 1e-12.
double cross_entropy(const Matrix& p, const Matrix& q);
/// One-hot convenience for integer targets.
double cross_entropy(const std::vector<int>& targets, const Matrix& q);
Matrix one_hot_targets(const std::vector<int>& targets, std::size_t classes);

/// KL(N(mu, sigma^2) || N(0, 1)) summed over dimensions, mean over rows,
/// with sigma^2 = exp(logvar).
double gaussian_kl(const Matrix& mu, const Matrix& logvar);

}  // namespace sedg::nn
