#include "sedg/nn/models.hpp"

#include <cmath>
#include <stdexcept>

#include "sedg/config.hpp"

namespace sedg::nn {

namespace {

constexpr int kCheckpointVersion = 1;

std::vector<LrndBlockConfig> widths_to_blocks(const std::vector<std::size_t>& widths, double dropout) {
  std::vector<LrndBlockConfig> out;
  for (auto w : widths) out.push_back({w, dropout});
  return out;
}

Matrix label_rows(const Param& table, const std::vector<int>& labels) {
  Matrix out(static_cast<Eigen::Index>(labels.size()), table.value.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= table.value.rows())
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " outside label table");
    out.row(static_cast<Eigen::Index>(i)) = table.value.row(labels[i]);
  }
  return out;
}

void label_backward(Param& table, const std::vector<int>& labels, const Matrix& d) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    table.grad.row(labels[i]) += d.row(static_cast<Eigen::Index>(i));
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

nlohmann::json stack_buffers(const BlockStack& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : s.blocks)
    out.push_back({{"running_mean", matrix_to_json(b.bn.running_mean)},
                   {"running_var", matrix_to_json(b.bn.running_var)}});
  return out;
}

void load_stack_buffers(BlockStack& s, const nlohmann::json& j) {
  if (j.size() != s.blocks.size()) throw SchemaError("checkpoint block count mismatch");
  for (std::size_t i = 0; i < s.blocks.size(); ++i) {
    s.blocks[i].bn.running_mean = matrix_from_json(j[i].at("running_mean")).row(0);
    s.blocks[i].bn.running_var = matrix_from_json(j[i].at("running_var")).row(0);
  }
}

void check_header(const nlohmann::json& j, const std::string& kind) {
  if (j.value("format", "") != "sedg-checkpoint") throw SchemaError("not a checkpoint file");
  if (j.value("version", 0) != kCheckpointVersion)
    throw SchemaError("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
  if (j.value("kind", "") != kind)
    throw SchemaError("checkpoint holds '" + j.value("kind", "") + "', expected '" + kind + "'");
}

template <typename Model>
std::vector<const Param*> const_params(const Model& m) {
  auto ps = const_cast<Model&>(m).parameters();
  return {ps.begin(), ps.end()};
}

}  // namespace

// ---------------------------------------------------------------- NnModel

NnModel::NnModel(const Schema& schema, NnModelConfig cfg, std::uint64_t seed)
    : schema_(schema), cfg_(std::move(cfg)) {
  if (cfg_.blocks.empty()) throw std::invalid_argument("NnModel needs at least one LRND block");
  Rng rng(seed);
  embedding = FeatureEmbedding(schema_, cfg_.embedding_dim, rng);
  trunk = BlockStack(embedding.out_dim(), cfg_.blocks, rng, "block");
  head = Dense(trunk.out_dim(embedding.out_dim()), static_cast<std::size_t>(cfg_.output_classes), rng, "head");
}

Matrix NnModel::forward_logits(const Matrix& x, const PassOptions& opts, Tape* tape) const {
  Matrix e = embedding.forward(x);
  Matrix h = trunk.forward(e, opts, tape ? &tape->blocks : nullptr);
  Matrix logits = head.forward(h);
  if (tape) {
    tape->input = x;
    tape->embedded = std::move(e);
    tape->hidden = std::move(h);
  }
  return logits;
}

Matrix NnModel::predict_proba(const Matrix& x) const {
  return softmax_rows(forward_logits(x, PassOptions::evaluation(), nullptr));
}

double NnModel::loss(const Matrix& x, const std::vector<int>& y, const PassOptions& opts) const {
  return cross_entropy(y, softmax_rows(forward_logits(x, opts, nullptr)));
}

double NnModel::loss_and_backward(const Matrix& x, const std::vector<int>& y, const PassOptions& opts) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("batch/target size mismatch");
  Tape tape;
  Matrix probs = softmax_rows(forward_logits(x, opts, &tape));
  Matrix target = one_hot_targets(y, static_cast<std::size_t>(cfg_.output_classes));
  const double value = cross_entropy(target, probs);
  Matrix d_logits = (probs - target) / static_cast<double>(x.rows());
  Matrix d_h = head.backward(tape.hidden, d_logits);
  Matrix d_e = trunk.backward(d_h, tape.blocks);
  embedding.backward(tape.input, d_e);
  if (opts.phase == Phase::train) trunk.update_running(tape.blocks);
  return value;
}

std::vector<Param*> NnModel::parameters() {
  std::vector<Param*> out;
  embedding.collect(out);
  trunk.collect(out);
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

// ------------------------------------------------------------ OutputLayout

OutputLayout::OutputLayout(const Schema& schema) {
  for (const auto& f : schema.features) {
    offsets.push_back(total);
    const std::size_t w = f.is_discrete() ? f.cardinality() : 1;
    widths.push_back(w);
    discrete.push_back(f.is_discrete());
    total += w;
  }
}

double reconstruction_loss(const OutputLayout& layout, const Matrix& out, const Matrix& x, Matrix* d_out) {
  const Eigen::Index n = out.rows();
  if (n == 0) return 0.0;
  if (d_out) *d_out = Matrix::Zero(out.rows(), out.cols());
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t f = 0; f < layout.offsets.size(); ++f) {
    const auto off = static_cast<Eigen::Index>(layout.offsets[f]);
    const auto w = static_cast<Eigen::Index>(layout.widths[f]);
    const auto col = static_cast<Eigen::Index>(f);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (layout.discrete[f]) {
        RowVector logits = out.block(r, off, 1, w);
        const double m = logits.maxCoeff();
        RowVector p = (logits.array() - m).exp();
        const double z = p.sum();
        p /= z;
        const auto code = static_cast<Eigen::Index>(x(r, col));
        total += -(logits(code) - m - std::log(z));
        if (d_out) {
          p(code) -= 1.0;
          d_out->block(r, off, 1, w) = p * inv_n;
        }
      } else {
        const double diff = out(r, off) - x(r, col);
        total += diff * diff;
        if (d_out) (*d_out)(r, off) = 2.0 * diff * inv_n;
      }
    }
  }
  return total * inv_n;
}

Matrix soft_output(const OutputLayout& layout, const Matrix& out) {
  Matrix s = out;
  for (std::size_t f = 0; f < layout.offsets.size(); ++f) {
    if (!layout.discrete[f]) continue;
    const auto off = static_cast<Eigen::Index>(layout.offsets[f]);
    const auto w = static_cast<Eigen::Index>(layout.widths[f]);
    s.middleCols(off, w) = softmax_rows(out.middleCols(off, w));
  }
  return s;
}

Matrix soft_output_backward(const OutputLayout& layout, const Matrix& out, const Matrix& d_soft) {
  Matrix d = d_soft;
  for (std::size_t f = 0; f < layout.offsets.size(); ++f) {
    if (!layout.discrete[f]) continue;
    const auto off = static_cast<Eigen::Index>(layout.offsets[f]);
    const auto w = static_cast<Eigen::Index>(layout.widths[f]);
    Matrix p = softmax_rows(out.middleCols(off, w));
    Matrix g = d_soft.middleCols(off, w);
    Vector dot = (p.array() * g.array()).rowwise().sum();
    d.middleCols(off, w) = (p.array() * (g.colwise() - dot).array()).matrix();
  }
  return d;
}

Matrix decode_output(const OutputLayout& layout, const Matrix& out) {
  Matrix x(out.rows(), static_cast<Eigen::Index>(layout.offsets.size()));
  for (std::size_t f = 0; f < layout.offsets.size(); ++f) {
    const auto off = static_cast<Eigen::Index>(layout.offsets[f]);
    const auto w = static_cast<Eigen::Index>(layout.widths[f]);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      if (layout.discrete[f]) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < w; ++c)
          if (out(r, off + c) > out(r, off + best)) best = c;
        x(r, static_cast<Eigen::Index>(f)) = static_cast<double>(best);
      } else {
        x(r, static_cast<Eigen::Index>(f)) = std::clamp(out(r, off), 0.0, 1.0);
      }
    }
  }
  return x;
}

// ------------------------------------------------------ TabularAutoencoder

TabularAutoencoder::TabularAutoencoder(const Schema& schema, AutoencoderConfig cfg, std::uint64_t seed)
    : schema_(schema), cfg_(std::move(cfg)), layout_(schema_) {
  if (cfg_.bottleneck < 1) throw std::invalid_argument("bottleneck dimension must be >= 1");
  if (cfg_.bottleneck >= schema_.size())
    throw std::invalid_argument("bottleneck dimension " + std::to_string(cfg_.bottleneck) +
                                " must be smaller than the input dimension " +
                                std::to_string(schema_.size()));
  Rng rng(seed);
  embedding = FeatureEmbedding(schema_, cfg_.embedding_dim, rng);
  const std::size_t label_dim = cfg_.label_embedding_dim;
  if (label_dim > 0) {
    Matrix t(cfg_.num_classes, static_cast<Eigen::Index>(label_dim));
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = standard_normal(rng);
    label_table.emplace("label_embed", std::move(t));
  }
  const std::size_t enc_in = embedding.out_dim() + label_dim;
  encoder = BlockStack(enc_in, widths_to_blocks(cfg_.hidden, cfg_.dropout), rng, "encoder");
  const std::size_t enc_out = encoder.out_dim(enc_in);
  mu_head = Dense(enc_out, cfg_.bottleneck, rng, cfg_.variational ? "mu" : "bottleneck");
  if (cfg_.variational) {
    logvar_head.emplace(enc_out, cfg_.bottleneck, rng, "logvar");
    logvar_head->weight.value *= 0.01;
  }
  std::vector<std::size_t> mirrored(cfg_.hidden.rbegin(), cfg_.hidden.rend());
  const std::size_t dec_in = cfg_.bottleneck + label_dim;
  decoder = BlockStack(dec_in, widths_to_blocks(mirrored, cfg_.dropout), rng, "decoder");
  out_head = Dense(decoder.out_dim(dec_in), layout_.total, rng, "output");
}

Matrix TabularAutoencoder::with_labels(const Matrix& x, const std::vector<int>* labels) const {
  if (!conditional()) return x;
  if (!labels) throw std::invalid_argument("conditional autoencoder requires class labels");
  if (static_cast<Eigen::Index>(labels->size()) != x.rows())
    throw std::invalid_argument("label count does not match batch rows");
  return concat_cols(x, label_rows(*label_table, *labels));
}

Matrix TabularAutoencoder::forward(const Matrix& x, const std::vector<int>* labels,
                                   const PassOptions& opts, const Matrix* eps, Tape* tape) const {
  Matrix enc_in = with_labels(embedding.forward(x), labels);
  Tape local;
  Tape& t = tape ? *tape : local;
  Matrix h = encoder.forward(enc_in, opts, tape ? &t.encoder : nullptr);
  Matrix mu = mu_head.forward(h);
  Matrix z;
  Matrix logvar, e;
  if (cfg_.variational) {
    logvar = logvar_head->forward(h);
    if (eps) {
      e = *eps;
    } else if (opts.rng && opts.phase == Phase::train) {
      e.resize(mu.rows(), mu.cols());
      for (Eigen::Index j = 0; j < e.cols(); ++j)
        for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = standard_normal(*opts.rng);
    } else {
      e = Matrix::Zero(mu.rows(), mu.cols());
    }
    if (e.rows() != mu.rows() || e.cols() != mu.cols()) throw std::invalid_argument("eps has wrong shape");
    z = mu.array() + (0.5 * logvar.array()).exp() * e.array();
  } else {
    z = mu;
  }
  Matrix dec_in = with_labels(z, labels);
  Matrix dh = decoder.forward(dec_in, opts, tape ? &t.decoder : nullptr);
  Matrix out = out_head.forward(dh);
  if (tape) {
    t.input = x;
    t.labels = labels ? *labels : std::vector<int>{};
    t.encoder_in = std::move(enc_in);
    t.encoded_hidden = std::move(h);
    t.mu = std::move(mu);
    t.logvar = std::move(logvar);
    t.eps = std::move(e);
    t.z = std::move(z);
    t.decoder_in = std::move(dec_in);
    t.decoded_hidden = std::move(dh);
    t.out = out;
  }
  return out;
}

void TabularAutoencoder::backward(const Tape& t, const Matrix& d_out, const Matrix* d_z_extra,
                                  double kl_weight) {
  Matrix d_dh = out_head.backward(t.decoded_hidden, d_out);
  Matrix d_dec_in = decoder.backward(d_dh, t.decoder);
  const auto latent = static_cast<Eigen::Index>(cfg_.bottleneck);
  Matrix d_z = d_dec_in.leftCols(latent);
  if (conditional()) label_backward(*label_table, t.labels, d_dec_in.rightCols(d_dec_in.cols() - latent));
  if (d_z_extra) d_z += *d_z_extra;
  Matrix d_h;
  if (cfg_.variational) {
    const double inv_n = 1.0 / static_cast<double>(t.mu.rows());
    Matrix sigma = (0.5 * t.logvar.array()).exp();
    Matrix d_mu = d_z + kl_weight * inv_n * t.mu;
    Matrix d_logvar = (d_z.array() * t.eps.array() * 0.5 * sigma.array()).matrix() +
                      (kl_weight * 0.5 * inv_n * (t.logvar.array().exp() - 1.0)).matrix();
    d_h = mu_head.backward(t.encoded_hidden, d_mu) + logvar_head->backward(t.encoded_hidden, d_logvar);
  } else {
    d_h = mu_head.backward(t.encoded_hidden, d_z);
  }
  Matrix d_enc_in = encoder.backward(d_h, t.encoder);
  const auto emb = static_cast<Eigen::Index>(embedding.out_dim());
  if (conditional()) label_backward(*label_table, t.labels, d_enc_in.rightCols(d_enc_in.cols() - emb));
  embedding.backward(t.input, d_enc_in.leftCols(emb));
}

void TabularAutoencoder::update_running(const Tape& t) {
  encoder.update_running(t.encoder);
  decoder.update_running(t.decoder);
}

double TabularAutoencoder::loss(const Matrix& x, const std::vector<int>* labels, const PassOptions& opts,
                                const Matrix* eps) const {
  Tape t;
  Matrix out = forward(x, labels, opts, eps, &t);
  double value = reconstruction_loss(layout_, out, x, nullptr);
  if (cfg_.variational) value += gaussian_kl(t.mu, t.logvar);
  return value;
}

double TabularAutoencoder::loss_and_backward(const Matrix& x, const std::vector<int>* labels,
                                             const PassOptions& opts, const Matrix* eps) {
  Tape t;
  Matrix out = forward(x, labels, opts, eps, &t);
  Matrix d_out;
  double value = reconstruction_loss(layout_, out, x, &d_out);
  if (cfg_.variational) value += gaussian_kl(t.mu, t.logvar);
  backward(t, d_out, nullptr, cfg_.variational ? 1.0 : 0.0);
  if (opts.phase == Phase::train) update_running(t);
  return value;
}

std::pair<Matrix, Matrix> TabularAutoencoder::encode_distribution(const Matrix& x,
                                                                  const std::vector<int>* labels) const {
  const PassOptions opts = PassOptions::evaluation();
  Matrix h = encoder.forward(with_labels(embedding.forward(x), labels), opts, nullptr);
  Matrix mu = mu_head.forward(h);
  Matrix logvar = cfg_.variational ? logvar_head->forward(h) : Matrix::Zero(mu.rows(), mu.cols());
  return {std::move(mu), std::move(logvar)};
}

Matrix TabularAutoencoder::encode_mean(const Matrix& x, const std::vector<int>* labels) const {
  return encode_distribution(x, labels).first;
}

Matrix TabularAutoencoder::decode_latent(const Matrix& z, const std::vector<int>* labels) const {
  Matrix dh = decoder.forward(with_labels(z, labels), PassOptions::evaluation(), nullptr);
  return out_head.forward(dh);
}

Matrix TabularAutoencoder::reconstruct(const Matrix& x, const std::vector<int>* labels) const {
  return decode_output(layout_, decode_latent(encode_mean(x, labels), labels));
}

std::vector<Param*> TabularAutoencoder::parameters() {
  std::vector<Param*> out;
  embedding.collect(out);
  if (label_table) out.push_back(&*label_table);
  encoder.collect(out);
  out.push_back(&mu_head.weight);
  out.push_back(&mu_head.bias);
  if (logvar_head) {
    out.push_back(&logvar_head->weight);
    out.push_back(&logvar_head->bias);
  }
  decoder.collect(out);
  out.push_back(&out_head.weight);
  out.push_back(&out_head.bias);
  return out;
}

// ----------------------------------------------------------- Discriminator

Discriminator::Discriminator(std::size_t input_dim, DiscriminatorConfig cfg, std::uint64_t seed)
    : input_dim_(input_dim), cfg_(std::move(cfg)) {
  Rng rng(seed);
  if (cfg_.label_embedding_dim > 0) {
    Matrix t(cfg_.num_classes, static_cast<Eigen::Index>(cfg_.label_embedding_dim));
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = standard_normal(rng);
    label_table.emplace("disc.label_embed", std::move(t));
  }
  std::size_t width = input_dim + cfg_.label_embedding_dim;
  for (std::size_t i = 0; i < cfg_.hidden.size(); ++i) {
    layers.emplace_back(width, cfg_.hidden[i], rng, "disc." + std::to_string(i));
    width = cfg_.hidden[i];
  }
  layers.emplace_back(width, 1, rng, "disc.out");
}

Matrix Discriminator::forward(const Matrix& x, const std::vector<int>* labels, Tape* tape) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim_)
    throw std::invalid_argument("discriminator input width mismatch");
  Matrix h = x;
  if (conditional()) {
    if (!labels) throw std::invalid_argument("conditional discriminator requires labels");
    h = concat_cols(h, label_rows(*label_table, *labels));
  }
  if (tape) {
    tape->input = x;
    tape->labels = labels ? *labels : std::vector<int>{};
    tape->layer_in.clear();
    tape->pre.clear();
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (tape) tape->layer_in.push_back(h);
    Matrix z = layers[i].forward(h);
    if (tape) tape->pre.push_back(z);
    h = i + 1 < layers.size() ? Matrix(z.cwiseMax(0.0)) : z;
  }
  return h;
}

Matrix Discriminator::backward(const Tape& t, const Matrix& d_logit) {
  Matrix d = d_logit;
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (i + 1 < layers.size()) d = d.array() * (t.pre[i].array() > 0.0).cast<double>();
    d = layers[i].backward(t.layer_in[i], d);
  }
  const auto in = static_cast<Eigen::Index>(input_dim_);
  if (conditional()) label_backward(*label_table, t.labels, d.rightCols(d.cols() - in));
  return d.leftCols(in);
}

std::vector<Param*> Discriminator::parameters() {
  std::vector<Param*> out;
  if (label_table) out.push_back(&*label_table);
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

double binary_cross_entropy_logits(const Matrix& logits, double target, Matrix* d_logits) {
  const Eigen::Index n = logits.rows();
  if (n == 0) return 0.0;
  double total = 0.0;
  if (d_logits) d_logits->resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = logits(i, 0);
    // -[t log sig(s) + (1-t) log(1-sig(s))] = max(s,0) - t s + log(1 + e^-|s|)
    total += std::max(s, 0.0) - target * s + std::log1p(std::exp(-std::abs(s)));
    if (d_logits) (*d_logits)(i, 0) = (1.0 / (1.0 + std::exp(-s)) - target) / static_cast<double>(n);
  }
  return total / static_cast<double>(n);
}

// ------------------------------------------------------------ checkpoints

nlohmann::json params_to_json(const std::vector<const Param*>& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const Param* p : params) out[p->name] = matrix_to_json(p->value);
  return out;
}

void params_from_json(const nlohmann::json& j, const std::vector<Param*>& params) {
  for (Param* p : params) {
    if (!j.contains(p->name)) throw SchemaError("checkpoint is missing tensor '" + p->name + "'");
    Matrix m = matrix_from_json(j.at(p->name));
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
      throw SchemaError("checkpoint tensor '" + p->name + "' has the wrong shape");
    p->value = std::move(m);
    p->zero_grad();
  }
}

nlohmann::json to_checkpoint(const NnModel& m) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : m.config().blocks) blocks.push_back({{"width", b.width}, {"dropout", b.dropout_rate}});
  return {{"format", "sedg-checkpoint"},
          {"version", kCheckpointVersion},
          {"kind", "nn_model"},
          {"schema", format_schema(m.schema())},
          {"config",
           {{"embedding_dim", m.config().embedding_dim},
            {"blocks", blocks},
            {"output_classes", m.config().output_classes}}},
          {"params", params_to_json(const_params(m))},
          {"buffers", stack_buffers(m.trunk)}};
}

NnModel nn_model_from_checkpoint(const nlohmann::json& j) {
  check_header(j, "nn_model");
  NnModelConfig cfg;
  const auto& c = j.at("config");
  cfg.embedding_dim = c.at("embedding_dim").get<std::size_t>();
  cfg.output_classes = c.at("output_classes").get<int>();
  cfg.blocks.clear();
  for (const auto& b : c.at("blocks")) cfg.blocks.push_back({b.at("width").get<std::size_t>(), b.at("dropout").get<double>()});
  NnModel m(parse_schema(j.at("schema").get<std::string>()), cfg, 0);
  params_from_json(j.at("params"), m.parameters());
  load_stack_buffers(m.trunk, j.at("buffers"));
  return m;
}

nlohmann::json to_checkpoint(const TabularAutoencoder& m) {
  const auto& c = m.config();
  return {{"format", "sedg-checkpoint"},
          {"version", kCheckpointVersion},
          {"kind", "autoencoder"},
          {"schema", format_schema(m.schema())},
          {"config",
           {{"embedding_dim", c.embedding_dim},
            {"hidden", c.hidden},
            {"bottleneck", c.bottleneck},
            {"variational", c.variational},
            {"dropout", c.dropout},
            {"label_embedding_dim", c.label_embedding_dim},
            {"num_classes", c.num_classes}}},
          {"params", params_to_json(const_params(m))},
          {"buffers", {{"encoder", stack_buffers(m.encoder)}, {"decoder", stack_buffers(m.decoder)}}}};
}

TabularAutoencoder autoencoder_from_checkpoint(const nlohmann::json& j) {
  check_header(j, "autoencoder");
  const auto& c = j.at("config");
  AutoencoderConfig cfg;
  cfg.embedding_dim = c.at("embedding_dim").get<std::size_t>();
  cfg.hidden = c.at("hidden").get<std::vector<std::size_t>>();
  cfg.bottleneck = c.at("bottleneck").get<std::size_t>();
  cfg.variational = c.at("variational").get<bool>();
  cfg.dropout = c.at("dropout").get<double>();
  cfg.label_embedding_dim = c.at("label_embedding_dim").get<std::size_t>();
  cfg.num_classes = c.at("num_classes").get<int>();
  TabularAutoencoder m(parse_schema(j.at("schema").get<std::string>()), cfg, 0);
  params_from_json(j.at("params"), m.parameters());
  load_stack_buffers(m.encoder, j.at("buffers").at("encoder"));
  load_stack_buffers(m.decoder, j.at("buffers").at("decoder"));
  return m;
}

}  // namespace sedg::nn
