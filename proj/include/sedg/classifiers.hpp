#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sedg/data.hpp"
#include "sedg/embeddings.hpp"
#include "sedg/nn/models.hpp"
#include "sedg/nn/train.hpp"

namespace sedg {

/// Classifier over datasets. predict() is the row argmax of predict_scores()
/// with ties resolved to the lowest class.
class Classifier {
 public:
  virtual ~Classifier() = default;

  /// Trains from scratch.
  virtual void fit(const Dataset& train) = 0;
  /// Continues training from the current state. Models without a notion of
  /// incremental training retrain from scratch.
  virtual void fit_more(const Dataset& train) { fit(train); }
  virtual bool supports_warm_start() const { return false; }

  /// n x num_classes score matrix.
  virtual Matrix predict_scores(const Dataset& d) const = 0;
  std::vector<int> predict(const Dataset& d) const;

  virtual std::string name() const = 0;
  virtual nlohmann::json to_json() const = 0;
  virtual std::unique_ptr<Classifier> clone() const = 0;
};

/// Model over plain real matrices, used behind a featurizer.
class VectorModel {
 public:
  virtual ~VectorModel() = default;
  virtual void fit(const Matrix& x, const std::vector<int>& y, int num_classes) = 0;
  virtual Matrix scores(const Matrix& x) const = 0;
  virtual std::string name() const = 0;
  virtual nlohmann::json to_json() const = 0;
  virtual std::unique_ptr<VectorModel> clone() const = 0;
};

/// Models that can attribute impurity decreases to input columns.
class TreeModel : public VectorModel {
 public:
  /// Unnormalised sum of weighted impurity decreases per input column.
  virtual std::vector<double> impurity_importance(std::size_t num_inputs) const = 0;
};

// ------------------------------------------------------------------ trees

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Class frequencies (classification) or the leaf value (regression, size 1).
  std::vector<double> value;
  std::size_t samples = 0;
  double impurity_decrease = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct TreeConfig {
  /// 0 = unlimited.
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  std::size_t min_split = 2;
  /// Columns examined per split; 0 = all.
  std::size_t max_features = 0;
  std::uint64_t seed = 0;
};

/// CART tree. Classification splits maximise the weighted gini decrease;
/// regression splits minimise the squared error. Thresholds sit midway
/// between consecutive distinct values; x <= threshold goes left. Ties in
/// gain keep the lowest column, then the lowest threshold.
class DecisionTree : public TreeModel {
 public:
  explicit DecisionTree(TreeConfig cfg = {}) : cfg_(cfg) {}

  void fit(const Matrix& x, const std::vector<int>& y, int num_classes) override;
  /// Fits on the given rows only (bootstrap indices may repeat).
  void fit_rows(const Matrix& x, const std::vector<int>& y, int num_classes,
                const std::vector<std::size_t>& rows);
  /// Least-squares regression tree on `target`; leaves hold the mean unless
  /// `leaf_value` is given, which maps the leaf's rows to its value.
  void fit_regression(const Matrix& x, const Vector& target, const std::vector<std::size_t>& rows,
                      const std::function<double(const std::vector<std::size_t>&)>& leaf_value = {});

  Matrix scores(const Matrix& x) const override;
  /// Leaf index reached by row `r`.
  std::size_t leaf_of(const Eigen::Ref<const RowVector>& row) const;
  double predict_value(const Eigen::Ref<const RowVector>& row) const;

  std::string name() const override { return "decision_tree"; }
  nlohmann::json to_json() const override;
  static DecisionTree from_json(const nlohmann::json& j);
  std::unique_ptr<VectorModel> clone() const override { return std::make_unique<DecisionTree>(*this); }
  std::vector<double> impurity_importance(std::size_t num_inputs) const override;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeConfig& config() const { return cfg_; }

 private:
  TreeConfig cfg_;
  int num_classes_ = 0;
  std::vector<TreeNode> nodes_;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  /// Columns per split; 0 = floor(sqrt(columns)).
  std::size_t feature_subset = 0;
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  bool bootstrap = true;
  /// Scores as vote shares of the trees' argmax instead of mean leaf distributions.
  bool majority_vote = false;
  std::uint64_t seed = 0;
};

class RandomForest : public TreeModel {
 public:
  explicit RandomForest(ForestConfig cfg = {}) : cfg_(cfg) {}

  void fit(const Matrix& x, const std::vector<int>& y, int num_classes) override;
  Matrix scores(const Matrix& x) const override;
  std::string name() const override { return "random_forest"; }
  nlohmann::json to_json() const override;
  static RandomForest from_json(const nlohmann::json& j);
  std::unique_ptr<VectorModel> clone() const override { return std::make_unique<RandomForest>(*this); }
  std::vector<double> impurity_importance(std::size_t num_inputs) const override;

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  ForestConfig cfg_;
  int num_classes_ = 0;
  std::vector<DecisionTree> trees_;
};

struct BoostingConfig {
  std::size_t n_rounds = 30;
  double learning_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_leaf = 1;
  std::uint64_t seed = 0;
};

/// Multiclass gradient boosting: per round one regression tree per class is
/// fit to the negative gradient y_k - p_k of the softmax cross entropy, with
/// Newton leaf values (K-1)/K * sum r / sum |r|(1-|r|). Scores start at 0.
class GradientBoosting : public TreeModel {
 public:
  explicit GradientBoosting(BoostingConfig cfg = {}) : cfg_(cfg) {}

  void fit(const Matrix& x, const std::vector<int>& y, int num_classes) override;
  /// Softmax probabilities after all rounds.
  Matrix scores(const Matrix& x) const override;
  /// Raw additive scores after the first `rounds` rounds.
  Matrix staged_raw(const Matrix& x, std::size_t rounds) const;
  std::size_t rounds() const { return rounds_.size(); }

  std::string name() const override { return "gradient_boosting"; }
  nlohmann::json to_json() const override;
  static GradientBoosting from_json(const nlohmann::json& j);
  std::unique_ptr<VectorModel> clone() const override { return std::make_unique<GradientBoosting>(*this); }
  std::vector<double> impurity_importance(std::size_t num_inputs) const override;

 private:
  BoostingConfig cfg_;
  int num_classes_ = 0;
  /// rounds_[r][k] is the tree for class k in round r.
  std::vector<std::vector<DecisionTree>> rounds_;
};

// -------------------------------------------------------------------- SVM

enum class SvmMode { ovr, ovo };

struct SvmConfig {
  SvmMode mode = SvmMode::ovr;
  double c = 1.0;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
};

/// Linear soft-margin SVMs trained by Pegasos subgradient steps on
/// hinge loss + L2 (lambda = 1 / (C n)) with a bias term.
/// OvR scores are the raw margins. OvO scores are vote counts plus a
/// tie-break 0.5 (1 + tanh(sum of pairwise margins)), normalised per row.
class LinearSvm : public VectorModel {
 public:
  explicit LinearSvm(SvmConfig cfg = {}) : cfg_(cfg) {}

  void fit(const Matrix& x, const std::vector<int>& y, int num_classes) override;
  Matrix scores(const Matrix& x) const override;
  std::size_t machine_count() const { return machines_.size(); }
  std::string name() const override { return cfg_.mode == SvmMode::ovr ? "svm_ovr" : "svm_ovo"; }
  nlohmann::json to_json() const override;
  static LinearSvm from_json(const nlohmann::json& j);
  std::unique_ptr<VectorModel> clone() const override { return std::make_unique<LinearSvm>(*this); }
  /// True when training saw fewer than two classes.
  bool degenerate() const { return degenerate_; }

  struct Machine {
    int positive = 0;
    int negative = -1;  // -1 = rest
    Vector w;
    double b = 0.0;
  };
  const std::vector<Machine>& machines() const { return machines_; }

 private:
  SvmConfig cfg_;
  int num_classes_ = 0;
  bool degenerate_ = false;
  int constant_class_ = 0;
  std::vector<Machine> machines_;
};

// -------------------------------------------------------------- wrappers

enum class Featurizer { encoded, one_hot, embedded };

/// Dataset classifier that featurizes samples and delegates to a VectorModel.
class FeaturizedClassifier : public Classifier {
 public:
  FeaturizedClassifier(std::unique_ptr<VectorModel> model, Featurizer featurizer,
                       std::shared_ptr<const Embedder> embedder = nullptr);
  FeaturizedClassifier(const FeaturizedClassifier& other);

  void fit(const Dataset& train) override;
  Matrix predict_scores(const Dataset& d) const override;
  std::string name() const override;
  nlohmann::json to_json() const override;
  std::unique_ptr<Classifier> clone() const override { return std::make_unique<FeaturizedClassifier>(*this); }
  static std::unique_ptr<FeaturizedClassifier> from_json(const nlohmann::json& j);

  Matrix features(const Dataset& d) const;
  const VectorModel& model() const { return *model_; }
  Featurizer featurizer() const { return featurizer_; }

 private:
  std::unique_ptr<VectorModel> model_;
  Featurizer featurizer_;
  std::shared_ptr<const Embedder> embedder_;
  int num_classes_ = 0;
  std::size_t input_dim_ = 0;
};

/// The embedding network classifier.
class NnClassifier : public Classifier {
 public:
  NnClassifier(nn::NnModelConfig cfg, nn::TrainConfig tcfg) : cfg_(std::move(cfg)), tcfg_(tcfg) {}

  void fit(const Dataset& train) override;
  /// Warm start: continues optimising the current weights.
  void fit_more(const Dataset& train) override;
  bool supports_warm_start() const override { return true; }
  Matrix predict_scores(const Dataset& d) const override;
  std::string name() const override { return "nn"; }
  nlohmann::json to_json() const override;
  std::unique_ptr<Classifier> clone() const override { return std::make_unique<NnClassifier>(*this); }

  bool trained() const { return model_ != nullptr; }
  std::shared_ptr<const nn::NnModel> model() const { return model_; }
  const nn::TrainHistory& history() const { return history_; }
  const nn::TrainConfig& train_config() const { return tcfg_; }
  void set_model(std::shared_ptr<nn::NnModel> m) { model_ = std::move(m); }

 private:
  nn::NnModelConfig cfg_;
  nn::TrainConfig tcfg_;
  std::shared_ptr<nn::NnModel> model_;
  nn::TrainHistory history_;
  std::size_t fits_ = 0;
};

/// Wraps a classifier factory so it fits and predicts on embedder outputs.
/// Throws UnsupportedError for classifiers that cannot take real vectors.
std::unique_ptr<Classifier> embed_preprocess(const Classifier& prototype,
                                             std::shared_ptr<const Embedder> embedder);

/// Per-class score matrix mapped to cross-entropy losses of the true labels.
std::vector<double> per_sample_loss(const Classifier& c, const Dataset& d);

/// Builds a classifier by registry name: nn, decision_tree, random_forest,
/// gradient_boosting, svm_ovr, svm_ovo. `config` holds the model's options;
/// unknown keys raise ConfigError.
std::unique_ptr<Classifier> make_classifier(const std::string& name, const nlohmann::json& config,
                                            std::uint64_t seed);
std::vector<std::string> classifier_names();

/// Restores a classifier written by Classifier::to_json.
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

}  // namespace sedg
