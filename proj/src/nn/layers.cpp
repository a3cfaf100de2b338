#include "sedg/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace sedg::nn {

namespace {

Matrix he_uniform(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(in, 1)));
  Matrix m(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = (2.0 * uniform01(rng) - 1.0) * bound;
  return m;
}

}  // namespace

Dense::Dense(std::size_t in, std::size_t out, Rng& rng, const std::string& name)
    : weight(name + ".weight", he_uniform(in, out, rng)),
      bias(name + ".bias", Matrix::Zero(1, static_cast<Eigen::Index>(out))) {}

Matrix Dense::forward(const Matrix& x) const {
  if (x.cols() != weight.value.rows())
    throw std::invalid_argument(weight.name + ": input width " + std::to_string(x.cols()) +
                                " != " + std::to_string(weight.value.rows()));
  Matrix y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Dense::backward(const Matrix& x, const Matrix& dy) {
  weight.grad.noalias() += x.transpose() * dy;
  bias.grad.row(0) += dy.colwise().sum();
  return dy * weight.value.transpose();
}

BatchNorm::BatchNorm(std::size_t width, const std::string& name)
    : gamma(name + ".gamma", Matrix::Ones(1, static_cast<Eigen::Index>(width))),
      beta(name + ".beta", Matrix::Zero(1, static_cast<Eigen::Index>(width))),
      running_mean(RowVector::Zero(static_cast<Eigen::Index>(width))),
      running_var(RowVector::Ones(static_cast<Eigen::Index>(width))) {}

Matrix BatchNorm::forward(const Matrix& x, Phase phase, Cache* cache) const {
  RowVector mean, var;
  const bool batch_stats = phase == Phase::train;
  if (batch_stats) {
    mean = x.colwise().mean();
    Matrix centered = x.rowwise() - mean;
    var = centered.array().square().colwise().mean();
  } else {
    mean = running_mean;
    var = running_var;
  }
  RowVector inv_std = (var.array() + eps).rsqrt();
  Matrix xhat = (x.rowwise() - mean).array().rowwise() * inv_std.array();
  Matrix y = xhat.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->batch_mean = std::move(mean);
    cache->batch_var = std::move(var);
    cache->batch_stats = batch_stats;
  }
  return y;
}

Matrix BatchNorm::backward(const Matrix& dy, const Cache& c) {
  gamma.grad.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  Matrix dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  if (!c.batch_stats) return dxhat.array().rowwise() * c.inv_std.array();
  const double n = static_cast<double>(dy.rows());
  RowVector sum_dxhat = dxhat.colwise().sum();
  RowVector sum_dxhat_xhat = (dxhat.array() * c.xhat.array()).colwise().sum();
  Matrix dx = (n * dxhat.array()).matrix();
  dx.rowwise() -= sum_dxhat;
  dx -= (c.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
  return (dx.array().rowwise() * (c.inv_std.array() / n)).matrix();
}

void BatchNorm::update_running(const Cache& c, std::size_t rows) {
  if (!c.batch_stats) return;
  const double n = static_cast<double>(rows);
  RowVector unbiased = n > 1 ? RowVector(c.batch_var * (n / (n - 1.0))) : c.batch_var;
  running_mean = (1.0 - momentum) * running_mean + momentum * c.batch_mean;
  running_var = (1.0 - momentum) * running_var + momentum * unbiased;
}

LrndBlock::LrndBlock(std::size_t in, const LrndBlockConfig& cfg, Rng& rng, const std::string& name)
    : linear(in, cfg.width, rng, name + ".linear"),
      bn(cfg.width, name + ".bn"),
      dropout_rate(cfg.dropout_rate) {
  if (cfg.width < 1) throw std::invalid_argument("LRND block width must be >= 1");
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0)
    throw std::invalid_argument("dropout rate must lie in [0, 1)");
}

Matrix LrndBlock::forward(const Matrix& x, const PassOptions& opts, Cache* cache) const {
  Matrix z = linear.forward(x);
  Matrix a = z.cwiseMax(0.0);
  Matrix y = bn.forward(a, opts.phase, cache ? &cache->bn : nullptr);
  Matrix mask;
  if (opts.dropout_active() && dropout_rate > 0.0) {
    mask.resize(y.rows(), y.cols());
    const double keep = 1.0 - dropout_rate;
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      for (Eigen::Index i = 0; i < mask.rows(); ++i)
        mask(i, j) = uniform01(*opts.rng) < keep ? 1.0 / keep : 0.0;
    y = y.cwiseProduct(mask);
  }
  if (cache) {
    cache->input = x;
    cache->pre_activation = std::move(z);
    cache->dropout_mask = std::move(mask);
  }
  return y;
}

Matrix LrndBlock::backward(const Matrix& dy, const Cache& c) {
  Matrix d = c.dropout_mask.size() ? Matrix(dy.cwiseProduct(c.dropout_mask)) : dy;
  d = bn.backward(d, c.bn);
  d = d.array() * (c.pre_activation.array() > 0.0).cast<double>();
  return linear.backward(c.input, d);
}

void LrndBlock::collect(std::vector<Param*>& out) {
  out.push_back(&linear.weight);
  out.push_back(&linear.bias);
  out.push_back(&bn.gamma);
  out.push_back(&bn.beta);
}

BlockStack::BlockStack(std::size_t in, const std::vector<LrndBlockConfig>& cfgs, Rng& rng,
                       const std::string& name) {
  std::size_t width = in;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    blocks.emplace_back(width, cfgs[i], rng, name + "." + std::to_string(i));
    width = cfgs[i].width;
  }
}

Matrix BlockStack::forward(const Matrix& x, const PassOptions& opts,
                           std::vector<LrndBlock::Cache>* caches) const {
  if (caches) caches->assign(blocks.size(), {});
  Matrix h = x;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    h = blocks[i].forward(h, opts, caches ? &(*caches)[i] : nullptr);
  return h;
}

Matrix BlockStack::backward(const Matrix& dy, const std::vector<LrndBlock::Cache>& caches) {
  Matrix d = dy;
  for (std::size_t i = blocks.size(); i-- > 0;) d = blocks[i].backward(d, caches[i]);
  return d;
}

void BlockStack::update_running(const std::vector<LrndBlock::Cache>& caches) {
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].update_running(caches[i]);
}

void BlockStack::collect(std::vector<Param*>& out) {
  for (auto& b : blocks) b.collect(out);
}

FeatureEmbedding::FeatureEmbedding(const Schema& schema, std::size_t dim, Rng& rng) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("embedding dimension must be >= 1");
  const auto d = static_cast<Eigen::Index>(dim);
  for (const auto& f : schema.features) {
    kinds_.push_back(f.kind);
    Eigen::Index rows = f.is_discrete() ? static_cast<Eigen::Index>(f.cardinality()) : 2;
    Matrix t(rows, d);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) t(i, j) = standard_normal(rng);
    tables.emplace_back("embed." + f.name, std::move(t));
  }
}

Matrix FeatureEmbedding::forward(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != kinds_.size())
    throw std::invalid_argument("embedding: expected " + std::to_string(kinds_.size()) +
                                " encoded columns, got " + std::to_string(x.cols()));
  const auto d = static_cast<Eigen::Index>(dim_);
  Matrix out(x.rows(), static_cast<Eigen::Index>(out_dim()));
  for (std::size_t f = 0; f < kinds_.size(); ++f) {
    const Matrix& t = tables[f].value;
    const auto off = static_cast<Eigen::Index>(f) * d;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double v = x(r, static_cast<Eigen::Index>(f));
      if (kinds_[f] == FeatureKind::discrete)
        out.block(r, off, 1, d) = t.row(static_cast<Eigen::Index>(v));
      else
        out.block(r, off, 1, d) = v * t.row(0) + t.row(1);
    }
  }
  return out;
}

void FeatureEmbedding::backward(const Matrix& x, const Matrix& dy) {
  const auto d = static_cast<Eigen::Index>(dim_);
  for (std::size_t f = 0; f < kinds_.size(); ++f) {
    Matrix& g = tables[f].grad;
    const auto off = static_cast<Eigen::Index>(f) * d;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double v = x(r, static_cast<Eigen::Index>(f));
      if (kinds_[f] == FeatureKind::discrete) {
        g.row(static_cast<Eigen::Index>(v)) += dy.block(r, off, 1, d);
      } else {
        g.row(0) += v * dy.block(r, off, 1, d);
        g.row(1) += dy.block(r, off, 1, d);
      }
    }
  }
}

RowVector FeatureEmbedding::embed_value(std::size_t f, double v) const {
  const Matrix& t = tables.at(f).value;
  if (kinds_[f] == FeatureKind::discrete) return t.row(static_cast<Eigen::Index>(v));
  return v * t.row(0) + t.row(1);
}

void FeatureEmbedding::collect(std::vector<Param*>& out) {
  for (auto& t : tables) out.push_back(&t);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

double cross_entropy(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw std::invalid_argument("cross_entropy: shape mismatch");
  if (p.rows() == 0) return 0.0;
  const Matrix logq = q.cwiseMax(1e-12).array().log();
  return -(p.array() * logq.array()).sum() / static_cast<double>(p.rows());
}

Matrix one_hot_targets(const std::vector<int>& targets, std::size_t classes) {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(targets.size()), static_cast<Eigen::Index>(classes));
  for (std::size_t i = 0; i < targets.size(); ++i) p(static_cast<Eigen::Index>(i), targets[i]) = 1.0;
  return p;
}

double cross_entropy(const std::vector<int>& targets, const Matrix& q) {
  return cross_entropy(one_hot_targets(targets, static_cast<std::size_t>(q.cols())), q);
}

double gaussian_kl(const Matrix& mu, const Matrix& logvar) {
  if (mu.rows() == 0) return 0.0;
  const auto terms = mu.array().square() + logvar.array().exp() - 1.0 - logvar.array();
  return 0.5 * terms.sum() / static_cast<double>(mu.rows());
}

}  // namespace sedg::nn
