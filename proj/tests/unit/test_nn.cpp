#include <gtest/gtest.h>

#include <cmath>

#include "sedg/nn/models.hpp"
#include "sedg/nn/optim.hpp"
#include "sedg/nn/train.hpp"
#include "support/oracles.hpp"

using namespace sedg;
using namespace sedg::nn;

namespace {

PassOptions deterministic_train() {
  PassOptions o;
  o.phase = Phase::train;
  o.dropout = false;
  return o;
}

Matrix batch_of(const Dataset& d, std::size_t rows) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < rows; ++i) idx.push_back((i * 7) % d.size());
  return Encoder(d.schema()).encode(d.subset(idx));
}

std::vector<int> labels_of(const Dataset& d, std::size_t rows) {
  std::vector<int> y;
  for (std::size_t i = 0; i < rows; ++i) y.push_back(d[(i * 7) % d.size()].target);
  return y;
}

}  // namespace

TEST(CrossEntropy, AnalyticUniformCases) {
  for (int k : {21, 20}) {
    Matrix q = Matrix::Constant(1, k, 1.0 / k);
    Matrix p = Matrix::Zero(1, k);
    p(0, 3) = 1.0;
    EXPECT_NEAR(cross_entropy(p, q), std::log(static_cast<double>(k)), 1e-9);
    EXPECT_NEAR(cross_entropy(std::vector<int>{3}, q), std::log(static_cast<double>(k)), 1e-9);
  }
}

TEST(Softmax, RowsSumToOneAndStable) {
  Matrix z(2, 3);
  z << 1000, 1001, 1002, -5, 0, 5;
  const Matrix p = softmax_rows(z);
  for (int r = 0; r < 2; ++r) EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
  EXPECT_NEAR(p(0, 2) / p(0, 1), std::exp(1.0), 1e-9);
}

TEST(GaussianKl, ZeroAtPriorAndAnalytic) {
  EXPECT_NEAR(gaussian_kl(Matrix::Zero(3, 2), Matrix::Zero(3, 2)), 0.0, 1e-15);
  Matrix mu(1, 1), lv(1, 1);
  mu << 1.0;
  lv << std::log(2.0);
  EXPECT_NEAR(gaussian_kl(mu, lv), 0.5 * (2.0 + 1.0 - 1.0 - std::log(2.0)), 1e-12);
}

TEST(GradientCheck, NnModel) {
  const Dataset d = oracle::toy_dataset({6, 6, 6});
  NnModelConfig cfg;
  cfg.blocks = {{12, 0.0}, {6, 0.0}};
  cfg.output_classes = 3;
  NnModel m(d.schema(), cfg, 3);
  const Matrix x = batch_of(d, 8);
  const auto y = labels_of(d, 8);
  const auto opts = deterministic_train();
  const auto r = gradient_check(m.parameters(), [&](bool grad) {
    return grad ? m.loss_and_backward(x, y, opts) : m.loss(x, y, opts);
  }, 12, 1);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradientCheck, AutoencoderAndVae) {
  const Dataset d = oracle::toy_dataset({6, 6, 6});
  for (bool variational : {false, true}) {
    AutoencoderConfig cfg;
    cfg.hidden = {10, 6};
    cfg.bottleneck = 3;
    cfg.variational = variational;
    cfg.num_classes = 3;
    TabularAutoencoder m(d.schema(), cfg, 4);
    const Matrix x = batch_of(d, 8);
    Rng rng(2);
    Matrix eps(8, 3);
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = standard_normal(rng);
    const auto opts = deterministic_train();
    const auto r = gradient_check(m.parameters(), [&](bool grad) {
      return grad ? m.loss_and_backward(x, nullptr, opts, &eps) : m.loss(x, nullptr, opts, &eps);
    }, 10, 2);
    EXPECT_LT(r.max_relative_error, 1e-4) << "variational=" << variational;
  }
}

TEST(GradientCheck, ConditionalAutoencoder) {
  const Dataset d = oracle::toy_dataset({6, 6, 6});
  AutoencoderConfig cfg;
  cfg.hidden = {10};
  cfg.bottleneck = 2;
  cfg.label_embedding_dim = 2;
  cfg.num_classes = 3;
  TabularAutoencoder m(d.schema(), cfg, 4);
  const Matrix x = batch_of(d, 8);
  const auto y = labels_of(d, 8);
  const auto opts = deterministic_train();
  const auto r = gradient_check(m.parameters(), [&](bool grad) {
    return grad ? m.loss_and_backward(x, &y, opts) : m.loss(x, &y, opts);
  }, 10, 3);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradientCheck, DiscriminatorInputAndParams) {
  DiscriminatorConfig cfg;
  cfg.hidden = {6, 4};
  Discriminator disc(5, cfg, 8);
  Rng rng(1);
  Matrix x(8, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = standard_normal(rng);
  const auto r = gradient_check(disc.parameters(), [&](bool grad) {
    Discriminator::Tape t;
    Matrix d;
    const Matrix logit = disc.forward(x, nullptr, &t);
    const double l = binary_cross_entropy_logits(logit, 1.0, grad ? &d : nullptr);
    if (grad) disc.backward(t, d);
    return l;
  }, 10, 4);
  EXPECT_LT(r.max_relative_error, 1e-4);

  Discriminator::Tape t;
  Matrix dl;
  binary_cross_entropy_logits(disc.forward(x, nullptr, &t), 0.0, &dl);
  const Matrix dx = disc.backward(t, dl);
  const double h = 1e-6;
  for (Eigen::Index c = 0; c < 5; ++c) {
    Matrix xp = x, xm = x;
    xp(2, c) += h;
    xm(2, c) -= h;
    const double num = (binary_cross_entropy_logits(disc.forward(xp, nullptr, nullptr), 0.0, nullptr) -
                        binary_cross_entropy_logits(disc.forward(xm, nullptr, nullptr), 0.0, nullptr)) /
                       (2 * h);
    EXPECT_NEAR(dx(2, c), num, 1e-6);
  }
}

TEST(BinaryCrossEntropy, MatchesFormula) {
  Matrix z(3, 1);
  z << -2.0, 0.0, 3.0;
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) expect += -std::log(1.0 / (1.0 + std::exp(-z(i, 0))));
  EXPECT_NEAR(binary_cross_entropy_logits(z, 1.0, nullptr), expect / 3.0, 1e-12);
  Matrix big(1, 1);
  big << 800.0;
  EXPECT_NEAR(binary_cross_entropy_logits(big, 0.0, nullptr), 800.0, 1e-9);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Param p("w", Matrix::Constant(1, 2, 1.0));
  p.grad << 0.5, -2.0;
  Adam opt({&p}, 0.1);
  opt.step();
  EXPECT_NEAR(p.value(0, 0), 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p.value(0, 1), 1.0 + 0.1 * 2.0 / (2.0 + 1e-8), 1e-12);
}

TEST(PlateauScheduler, DecaysAfterPatience) {
  PlateauScheduler s(2, 0.1);
  double lr = 1.0;
  lr = s.observe(1.0, lr);
  lr = s.observe(1.0, lr);
  EXPECT_DOUBLE_EQ(lr, 1.0);
  lr = s.observe(1.0, lr);
  EXPECT_DOUBLE_EQ(lr, 0.1);
  lr = s.observe(0.5, lr);
  EXPECT_DOUBLE_EQ(lr, 0.1);
}

TEST(Batches, CoverEveryRowOnce) {
  Rng rng(3);
  const auto b = make_batches(70, 32, rng);
  std::vector<int> seen(70, 0);
  for (const auto& batch : b)
    for (auto i : batch) ++seen[i];
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Training, ClassifierLearnsToyTask) {
  const Dataset d = oracle::toy_dataset({40, 40, 40});
  NnModelConfig cfg;
  cfg.blocks = {{32, 0.1}};
  cfg.output_classes = 3;
  TrainConfig t;
  t.max_epochs = 40;
  t.learning_rate = 1e-2;
  t.seed = 1;
  TrainHistory h;
  const NnModel m = train_classifier(d, cfg, t, &h);
  EXPECT_LT(h.epoch_loss.back(), h.epoch_loss.front());
  const Matrix p = m.predict_proba(Encoder(d.schema()).encode(d));
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index c;
    p.row(i).maxCoeff(&c);
    if (c == d[static_cast<std::size_t>(i)].target) ++correct;
  }
  EXPECT_GT(correct, 90u);
}

TEST(Checkpoint, RoundTripsPredictions) {
  const Dataset d = oracle::toy_dataset({10, 10, 10});
  NnModelConfig cfg;
  cfg.blocks = {{8, 0.0}};
  cfg.output_classes = 3;
  TrainConfig t;
  t.max_epochs = 3;
  const NnModel m = train_classifier(d, cfg, t);
  const NnModel back = nn_model_from_checkpoint(to_checkpoint(m));
  const Matrix x = Encoder(d.schema()).encode(d);
  EXPECT_EQ(m.predict_proba(x), back.predict_proba(x));

  const auto ae = train_vae(d, 2, t);
  const auto ae_back = autoencoder_from_checkpoint(to_checkpoint(ae));
  EXPECT_EQ(ae.reconstruct(x), ae_back.reconstruct(x));
}

TEST(Autoencoder, BottleneckMustBeNarrower) {
  AutoencoderConfig cfg;
  cfg.bottleneck = 5;
  EXPECT_ANY_THROW(TabularAutoencoder(oracle::toy_schema(), cfg, 1));
}

TEST(OutputLayout, SoftOutputBackwardMatchesFiniteDifference) {
  const Schema s = oracle::toy_schema();
  OutputLayout layout(s);
  Rng rng(6);
  Matrix out(2, static_cast<Eigen::Index>(layout.total));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = standard_normal(rng);
  Matrix w(2, out.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = standard_normal(rng);
  const Matrix g = soft_output_backward(layout, out, w);
  const double h = 1e-6;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    Matrix p = out, m = out;
    p(1, c) += h;
    m(1, c) -= h;
    const double num =
        ((soft_output(layout, p).array() * w.array()).sum() - (soft_output(layout, m).array() * w.array()).sum()) /
        (2 * h);
    EXPECT_NEAR(g(1, c), num, 1e-6);
  }
}
