#include "sedg/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sedg/config.hpp"
#include "sedg/metrics.hpp"

namespace sedg {

std::vector<int> Classifier::predict(const Dataset& d) const { return argmax_rows(predict_scores(d)); }

// ------------------------------------------------------------------ trees

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

std::vector<std::size_t> candidate_columns(std::size_t cols, std::size_t max_features, Rng& rng) {
  std::vector<std::size_t> all(cols);
  std::iota(all.begin(), all.end(), 0);
  if (max_features == 0 || max_features >= cols) return all;
  shuffle_in_place(all, rng);
  all.resize(max_features);
  std::sort(all.begin(), all.end());
  return all;
}

// Rows of `rows` sorted by column f (stable, so equal values keep input order).
std::vector<std::size_t> sorted_by(const Matrix& x, const std::vector<std::size_t>& rows, std::size_t f) {
  std::vector<std::size_t> order = rows;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(f)) <
           x(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(f));
  });
  return order;
}

double value_at(const Matrix& x, std::size_t r, std::size_t f) {
  return x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f));
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const TreeConfig& cfg, std::vector<TreeNode>& nodes)
      : x_(x), cfg_(cfg), nodes_(nodes), rng_(derive_seed(cfg.seed, 0x7ee)) {}

  // Classification.
  int build_class(const std::vector<std::size_t>& rows, const std::vector<int>& y, int k, std::size_t depth) {
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    for (auto r : rows) counts[static_cast<std::size_t>(y[r])] += 1.0;
    const double n = static_cast<double>(rows.size());
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    const double parent = 1.0 - sq / (n * n);

    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[static_cast<std::size_t>(id)].samples = rows.size();
    std::vector<double> dist = counts;
    for (double& c : dist) c /= n;
    nodes_[static_cast<std::size_t>(id)].value = dist;

    if (parent <= 1e-12 || !may_split(rows.size(), depth)) return id;

    SplitChoice best;
    for (std::size_t f : candidate_columns(static_cast<std::size_t>(x_.cols()), cfg_.max_features, rng_)) {
      const auto order = sorted_by(x_, rows, f);
      std::vector<double> left(static_cast<std::size_t>(k), 0.0);
      std::vector<double> right = counts;
      double sq_left = 0.0, sq_right = sq;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto c = static_cast<std::size_t>(y[order[i]]);
        sq_left += 2.0 * left[c] + 1.0;
        left[c] += 1.0;
        sq_right -= 2.0 * right[c] - 1.0;
        right[c] -= 1.0;
        const double v = value_at(x_, order[i], f);
        const double next = value_at(x_, order[i + 1], f);
        if (!(v < next)) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        if (nl < static_cast<double>(cfg_.min_leaf) || nr < static_cast<double>(cfg_.min_leaf)) continue;
        const double gini_l = 1.0 - sq_left / (nl * nl);
        const double gini_r = 1.0 - sq_right / (nr * nr);
        const double gain = parent - (nl * gini_l + nr * gini_r) / n;
        if (gain > best.gain + 1e-12) best = {static_cast<int>(f), 0.5 * (v + next), gain};
      }
    }
    if (best.feature < 0) return id;
    auto [l_rows, r_rows] = partition(rows, best);
    const int l = build_class(l_rows, y, k, depth + 1);
    const int r = build_class(r_rows, y, k, depth + 1);
    finish(id, best, l, r, n);
    return id;
  }

  // Least-squares regression.
  int build_reg(const std::vector<std::size_t>& rows, const Vector& t, std::size_t depth,
                const std::function<double(const std::vector<std::size_t>&)>& leaf_value) {
    double sum = 0.0, sumsq = 0.0;
    for (auto r : rows) {
      sum += t(static_cast<Eigen::Index>(r));
      sumsq += t(static_cast<Eigen::Index>(r)) * t(static_cast<Eigen::Index>(r));
    }
    const double n = static_cast<double>(rows.size());
    const double parent = sumsq - sum * sum / n;

    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[static_cast<std::size_t>(id)].samples = rows.size();
    nodes_[static_cast<std::size_t>(id)].value = {leaf_value ? leaf_value(rows) : sum / n};

    if (parent <= 1e-12 * std::max(1.0, n) || !may_split(rows.size(), depth)) return id;

    SplitChoice best;
    for (std::size_t f : candidate_columns(static_cast<std::size_t>(x_.cols()), cfg_.max_features, rng_)) {
      const auto order = sorted_by(x_, rows, f);
      double sl = 0.0, ql = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const double ti = t(static_cast<Eigen::Index>(order[i]));
        sl += ti;
        ql += ti * ti;
        const double v = value_at(x_, order[i], f);
        const double next = value_at(x_, order[i + 1], f);
        if (!(v < next)) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        if (nl < static_cast<double>(cfg_.min_leaf) || nr < static_cast<double>(cfg_.min_leaf)) continue;
        const double sse_l = ql - sl * sl / nl;
        const double sr = sum - sl;
        const double sse_r = (sumsq - ql) - sr * sr / nr;
        const double gain = (parent - sse_l - sse_r) / n;
        if (gain > best.gain + 1e-12) best = {static_cast<int>(f), 0.5 * (v + next), gain};
      }
    }
    if (best.feature < 0) return id;
    auto [l_rows, r_rows] = partition(rows, best);
    const int l = build_reg(l_rows, t, depth + 1, leaf_value);
    const int r = build_reg(r_rows, t, depth + 1, leaf_value);
    finish(id, best, l, r, n);
    return id;
  }

 private:
  bool may_split(std::size_t n, std::size_t depth) const {
    if (cfg_.max_depth != 0 && depth >= cfg_.max_depth) return false;
    return n >= std::max<std::size_t>(cfg_.min_split, 2 * cfg_.min_leaf);
  }

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(const std::vector<std::size_t>& rows,
                                                                          const SplitChoice& s) const {
    std::vector<std::size_t> l, r;
    for (auto row : rows)
      (value_at(x_, row, static_cast<std::size_t>(s.feature)) <= s.threshold ? l : r).push_back(row);
    return {std::move(l), std::move(r)};
  }

  void finish(int id, const SplitChoice& s, int l, int r, double n) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = l;
    node.right = r;
    node.impurity_decrease = n * s.gain;
  }

  const Matrix& x_;
  const TreeConfig& cfg_;
  std::vector<TreeNode>& nodes_;
  Rng rng_;
};

nlohmann::json nodes_to_json(const std::vector<TreeNode>& nodes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& n : nodes)
    out.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right},
                   {"v", n.value}, {"n", n.samples}, {"d", n.impurity_decrease}});
  return out;
}

std::vector<TreeNode> nodes_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& e : j) {
    TreeNode n;
    n.feature = e.at("f").get<int>();
    n.threshold = e.at("t").get<double>();
    n.left = e.at("l").get<int>();
    n.right = e.at("r").get<int>();
    n.value = e.at("v").get<std::vector<double>>();
    n.samples = e.at("n").get<std::size_t>();
    n.impurity_decrease = e.at("d").get<double>();
    nodes.push_back(std::move(n));
  }
  return nodes;
}

void check_fit_input(const Matrix& x, const std::vector<int>& y, int num_classes) {
  if (x.rows() == 0) throw std::invalid_argument("cannot fit on an empty training set");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("rows/targets mismatch");
  for (int c : y)
    if (c < 0 || c >= num_classes) throw std::invalid_argument("target outside the class range");
}

}  // namespace

void DecisionTree::fit(const Matrix& x, const std::vector<int>& y, int num_classes) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  fit_rows(x, y, num_classes, rows);
}

void DecisionTree::fit_rows(const Matrix& x, const std::vector<int>& y, int num_classes,
                            const std::vector<std::size_t>& rows) {
  check_fit_input(x, y, num_classes);
  if (rows.empty()) throw std::invalid_argument("cannot fit a tree on zero rows");
  num_classes_ = num_classes;
  nodes_.clear();
  TreeBuilder(x, cfg_, nodes_).build_class(rows, y, num_classes, 0);
}

void DecisionTree::fit_regression(const Matrix& x, const Vector& target, const std::vector<std::size_t>& rows,
                                  const std::function<double(const std::vector<std::size_t>&)>& leaf_value) {
  if (rows.empty()) throw std::invalid_argument("cannot fit a tree on zero rows");
  num_classes_ = 0;
  nodes_.clear();
  TreeBuilder(x, cfg_, nodes_).build_reg(rows, target, 0, leaf_value);
}

std::size_t DecisionTree::leaf_of(const Eigen::Ref<const RowVector>& row) const {
  if (nodes_.empty()) throw std::logic_error("decision tree is not fitted");
  std::size_t i = 0;
  while (!nodes_[i].is_leaf())
    i = static_cast<std::size_t>(row(nodes_[i].feature) <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right);
  return i;
}

double DecisionTree::predict_value(const Eigen::Ref<const RowVector>& row) const {
  return nodes_[leaf_of(row)].value.at(0);
}

Matrix DecisionTree::scores(const Matrix& x) const {
  Matrix out = Matrix::Zero(x.rows(), num_classes_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& v = nodes_[leaf_of(x.row(i))].value;
    for (int c = 0; c < num_classes_; ++c) out(i, c) = v[static_cast<std::size_t>(c)];
  }
  return out;
}

std::vector<double> DecisionTree::impurity_importance(std::size_t num_inputs) const {
  std::vector<double> imp(num_inputs, 0.0);
  for (const auto& n : nodes_)
    if (!n.is_leaf()) imp.at(static_cast<std::size_t>(n.feature)) += n.impurity_decrease;
  return imp;
}

nlohmann::json DecisionTree::to_json() const {
  return {{"kind", "decision_tree"},
          {"config",
           {{"max_depth", cfg_.max_depth},
            {"min_leaf", cfg_.min_leaf},
            {"min_split", cfg_.min_split},
            {"max_features", cfg_.max_features},
            {"seed", cfg_.seed}}},
          {"num_classes", num_classes_},
          {"nodes", nodes_to_json(nodes_)}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
  const auto& c = j.at("config");
  TreeConfig cfg;
  cfg.max_depth = c.at("max_depth").get<std::size_t>();
  cfg.min_leaf = c.at("min_leaf").get<std::size_t>();
  cfg.min_split = c.at("min_split").get<std::size_t>();
  cfg.max_features = c.at("max_features").get<std::size_t>();
  cfg.seed = c.at("seed").get<std::uint64_t>();
  DecisionTree t(cfg);
  t.num_classes_ = j.at("num_classes").get<int>();
  t.nodes_ = nodes_from_json(j.at("nodes"));
  return t;
}

// ---------------------------------------------------------------- forest

void RandomForest::fit(const Matrix& x, const std::vector<int>& y, int num_classes) {
  check_fit_input(x, y, num_classes);
  if (cfg_.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  num_classes_ = num_classes;
  const auto cols = static_cast<std::size_t>(x.cols());
  const std::size_t mtry =
      cfg_.feature_subset == 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(cols))))
                               : std::min(cfg_.feature_subset, cols);
  const auto n = static_cast<std::size_t>(x.rows());
  trees_.clear();
  trees_.reserve(cfg_.n_trees);
  for (std::size_t t = 0; t < cfg_.n_trees; ++t) {
    Rng rng(derive_seed(cfg_.seed, 2 * t));
    std::vector<std::size_t> rows(n);
    if (cfg_.bootstrap) {
      for (auto& r : rows) r = uniform_index(rng, n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeConfig tc;
    tc.max_depth = cfg_.max_depth;
    tc.min_leaf = cfg_.min_leaf;
    tc.max_features = mtry;
    tc.seed = derive_seed(cfg_.seed, 2 * t + 1);
    DecisionTree tree(tc);
    tree.fit_rows(x, y, num_classes, rows);
    trees_.push_back(std::move(tree));
  }
}

Matrix RandomForest::scores(const Matrix& x) const {
  if (trees_.empty()) throw std::logic_error("random forest is not fitted");
  Matrix out = Matrix::Zero(x.rows(), num_classes_);
  for (const auto& tree : trees_) {
    Matrix s = tree.scores(x);
    if (cfg_.majority_vote) {
      const auto votes = argmax_rows(s);
      for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, votes[static_cast<std::size_t>(i)]) += 1.0;
    } else {
      out += s;
    }
  }
  return out / static_cast<double>(trees_.size());
}

std::vector<double> RandomForest::impurity_importance(std::size_t num_inputs) const {
  std::vector<double> imp(num_inputs, 0.0);
  for (const auto& tree : trees_) {
    const auto t = tree.impurity_importance(num_inputs);
    const double root = static_cast<double>(tree.nodes().front().samples);
    for (std::size_t i = 0; i < num_inputs; ++i) imp[i] += t[i] / root;
  }
  return imp;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"kind", "random_forest"},
          {"config",
           {{"n_trees", cfg_.n_trees},
            {"feature_subset", cfg_.feature_subset},
            {"max_depth", cfg_.max_depth},
            {"min_leaf", cfg_.min_leaf},
            {"bootstrap", cfg_.bootstrap},
            {"majority_vote", cfg_.majority_vote},
            {"seed", cfg_.seed}}},
          {"num_classes", num_classes_},
          {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  const auto& c = j.at("config");
  ForestConfig cfg;
  cfg.n_trees = c.at("n_trees").get<std::size_t>();
  cfg.feature_subset = c.at("feature_subset").get<std::size_t>();
  cfg.max_depth = c.at("max_depth").get<std::size_t>();
  cfg.min_leaf = c.at("min_leaf").get<std::size_t>();
  cfg.bootstrap = c.at("bootstrap").get<bool>();
  cfg.majority_vote = c.at("majority_vote").get<bool>();
  cfg.seed = c.at("seed").get<std::uint64_t>();
  RandomForest f(cfg);
  f.num_classes_ = j.at("num_classes").get<int>();
  for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
  return f;
}

// -------------------------------------------------------------- boosting

void GradientBoosting::fit(const Matrix& x, const std::vector<int>& y, int num_classes) {
  check_fit_input(x, y, num_classes);
  num_classes_ = num_classes;
  rounds_.clear();
  const auto n = static_cast<std::size_t>(x.rows());
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  Matrix f = Matrix::Zero(x.rows(), num_classes);
  const double scale = static_cast<double>(k - 1) / static_cast<double>(k);
  for (std::size_t round = 0; round < cfg_.n_rounds; ++round) {
    const Matrix p = nn::softmax_rows(f);
    std::vector<DecisionTree> trees;
    for (std::size_t c = 0; c < k; ++c) {
      Vector r(x.rows());
      for (std::size_t i = 0; i < n; ++i)
        r(static_cast<Eigen::Index>(i)) = (y[i] == static_cast<int>(c) ? 1.0 : 0.0) - p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      auto leaf = [&](const std::vector<std::size_t>& leaf_rows) {
        double num = 0.0, den = 0.0;
        for (auto i : leaf_rows) {
          const double ri = r(static_cast<Eigen::Index>(i));
          num += ri;
          den += std::abs(ri) * (1.0 - std::abs(ri));
        }
        return den < 1e-12 ? 0.0 : scale * num / den;
      };
      TreeConfig tc;
      tc.max_depth = cfg_.max_depth;
      tc.min_leaf = cfg_.min_leaf;
      tc.seed = derive_seed(cfg_.seed, round * k + c);
      DecisionTree tree(tc);
      tree.fit_regression(x, r, rows, leaf);
      for (std::size_t i = 0; i < n; ++i)
        f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) +=
            cfg_.learning_rate * tree.predict_value(x.row(static_cast<Eigen::Index>(i)));
      trees.push_back(std::move(tree));
    }
    rounds_.push_back(std::move(trees));
  }
}

Matrix GradientBoosting::staged_raw(const Matrix& x, std::size_t rounds) const {
  Matrix f = Matrix::Zero(x.rows(), num_classes_);
  for (std::size_t r = 0; r < std::min(rounds, rounds_.size()); ++r)
    for (std::size_t c = 0; c < rounds_[r].size(); ++c)
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        f(i, static_cast<Eigen::Index>(c)) += cfg_.learning_rate * rounds_[r][c].predict_value(x.row(i));
  return f;
}

Matrix GradientBoosting::scores(const Matrix& x) const {
  if (num_classes_ == 0) throw std::logic_error("gradient boosting is not fitted");
  return nn::softmax_rows(staged_raw(x, rounds_.size()));
}

std::vector<double> GradientBoosting::impurity_importance(std::size_t num_inputs) const {
  std::vector<double> imp(num_inputs, 0.0);
  for (const auto& round : rounds_)
    for (const auto& tree : round) {
      const auto t = tree.impurity_importance(num_inputs);
      for (std::size_t i = 0; i < num_inputs; ++i) imp[i] += t[i];
    }
  return imp;
}

nlohmann::json GradientBoosting::to_json() const {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& round : rounds_) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : round) trees.push_back(t.to_json());
    rounds.push_back(trees);
  }
  return {{"kind", "gradient_boosting"},
          {"config",
           {{"n_rounds", cfg_.n_rounds},
            {"learning_rate", cfg_.learning_rate},
            {"max_depth", cfg_.max_depth},
            {"min_leaf", cfg_.min_leaf},
            {"seed", cfg_.seed}}},
          {"num_classes", num_classes_},
          {"rounds", rounds}};
}

GradientBoosting GradientBoosting::from_json(const nlohmann::json& j) {
  const auto& c = j.at("config");
  BoostingConfig cfg;
  cfg.n_rounds = c.at("n_rounds").get<std::size_t>();
  cfg.learning_rate = c.at("learning_rate").get<double>();
  cfg.max_depth = c.at("max_depth").get<std::size_t>();
  cfg.min_leaf = c.at("min_leaf").get<std::size_t>();
  cfg.seed = c.at("seed").get<std::uint64_t>();
  GradientBoosting g(cfg);
  g.num_classes_ = j.at("num_classes").get<int>();
  for (const auto& round : j.at("rounds")) {
    std::vector<DecisionTree> trees;
    for (const auto& t : round) trees.push_back(DecisionTree::from_json(t));
    g.rounds_.push_back(std::move(trees));
  }
  return g;
}

// ------------------------------------------------------------------- SVM

namespace {

void pegasos(const Matrix& x, const std::vector<std::size_t>& rows, const std::vector<double>& labels, double c,
             std::size_t epochs, Rng& rng, Vector& w, double& b) {
  const auto d = x.cols();
  w = Vector::Zero(d);
  b = 0.0;
  if (rows.empty()) return;
  const double lambda = 1.0 / (c * static_cast<double>(rows.size()));
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t t = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    shuffle_in_place(order, rng);
    for (std::size_t o : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto row = static_cast<Eigen::Index>(rows[o]);
      const double margin = labels[o] * (x.row(row).dot(w) + b);
      w *= (1.0 - eta * lambda);
      b *= (1.0 - eta * lambda);
      if (margin < 1.0) {
        w += eta * labels[o] * x.row(row).transpose();
        b += eta * labels[o];
      }
    }
  }
}

}  // namespace

void LinearSvm::fit(const Matrix& x, const std::vector<int>& y, int num_classes) {
  check_fit_input(x, y, num_classes);
  if (cfg_.c <= 0.0) throw std::invalid_argument("svm C must be positive");
  num_classes_ = num_classes;
  machines_.clear();
  std::set<int> seen(y.begin(), y.end());
  degenerate_ = seen.size() < 2;
  if (degenerate_) {
    constant_class_ = *seen.begin();
    log_warning("svm trained on a single class; predicting class " + std::to_string(constant_class_));
    return;
  }
  const auto n = static_cast<std::size_t>(x.rows());
  std::size_t counter = 0;
  auto train = [&](int pos, int neg) {
    std::vector<std::size_t> rows;
    std::vector<double> labels;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] == pos) {
        rows.push_back(i);
        labels.push_back(1.0);
      } else if (neg < 0 || y[i] == neg) {
        rows.push_back(i);
        labels.push_back(-1.0);
      }
    }
    Machine m;
    m.positive = pos;
    m.negative = neg;
    Rng rng(derive_seed(cfg_.seed, counter++));
    pegasos(x, rows, labels, cfg_.c, cfg_.epochs, rng, m.w, m.b);
    machines_.push_back(std::move(m));
  };
  if (cfg_.mode == SvmMode::ovr) {
    for (int k = 0; k < num_classes; ++k) train(k, -1);
  } else {
    for (int a = 0; a < num_classes; ++a)
      for (int b = a + 1; b < num_classes; ++b) train(a, b);
  }
}

Matrix LinearSvm::scores(const Matrix& x) const {
  if (num_classes_ == 0) throw std::logic_error("svm is not fitted");
  Matrix out = Matrix::Zero(x.rows(), num_classes_);
  if (degenerate_) {
    out.col(constant_class_).setOnes();
    return out;
  }
  if (cfg_.mode == SvmMode::ovr) {
    for (const auto& m : machines_) out.col(m.positive) = (x * m.w).array() + m.b;
    return out;
  }
  Matrix margin_sum = Matrix::Zero(x.rows(), num_classes_);
  for (const auto& m : machines_) {
    const Vector margin = (x * m.w).array() + m.b;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out(i, margin(i) >= 0.0 ? m.positive : m.negative) += 1.0;
      margin_sum(i, m.positive) += margin(i);
      margin_sum(i, m.negative) -= margin(i);
    }
  }
  out.array() += 0.5 * (1.0 + margin_sum.array().tanh());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) /= out.row(i).sum();
  return out;
}

nlohmann::json LinearSvm::to_json() const {
  nlohmann::json machines = nlohmann::json::array();
  for (const auto& m : machines_)
    machines.push_back({{"positive", m.positive}, {"negative", m.negative}, {"w", matrix_to_json(m.w)}, {"b", m.b}});
  return {{"kind", name()},
          {"config", {{"c", cfg_.c}, {"epochs", cfg_.epochs}, {"seed", cfg_.seed}}},
          {"num_classes", num_classes_},
          {"degenerate", degenerate_},
          {"constant_class", constant_class_},
          {"machines", machines}};
}

LinearSvm LinearSvm::from_json(const nlohmann::json& j) {
  SvmConfig cfg;
  const std::string kind = j.at("kind").get<std::string>();
  cfg.mode = kind == "svm_ovo" ? SvmMode::ovo : SvmMode::ovr;
  cfg.c = j.at("config").at("c").get<double>();
  cfg.epochs = j.at("config").at("epochs").get<std::size_t>();
  cfg.seed = j.at("config").at("seed").get<std::uint64_t>();
  LinearSvm s(cfg);
  s.num_classes_ = j.at("num_classes").get<int>();
  s.degenerate_ = j.at("degenerate").get<bool>();
  s.constant_class_ = j.at("constant_class").get<int>();
  for (const auto& m : j.at("machines")) {
    Machine mm;
    mm.positive = m.at("positive").get<int>();
    mm.negative = m.at("negative").get<int>();
    mm.w = matrix_from_json(m.at("w")).col(0);
    mm.b = m.at("b").get<double>();
    s.machines_.push_back(std::move(mm));
  }
  return s;
}

// -------------------------------------------------------------- wrappers

namespace {

const char* featurizer_name(Featurizer f) {
  switch (f) {
    case Featurizer::encoded: return "encoded";
    case Featurizer::one_hot: return "one_hot";
    case Featurizer::embedded: return "embedded";
  }
  return "?";
}

Featurizer featurizer_from(const std::string& s) {
  if (s == "encoded") return Featurizer::encoded;
  if (s == "one_hot") return Featurizer::one_hot;
  if (s == "embedded") return Featurizer::embedded;
  throw ConfigError("unknown featurizer '" + s + "'");
}

std::unique_ptr<VectorModel> vector_model_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "decision_tree") return std::make_unique<DecisionTree>(DecisionTree::from_json(j));
  if (kind == "random_forest") return std::make_unique<RandomForest>(RandomForest::from_json(j));
  if (kind == "gradient_boosting") return std::make_unique<GradientBoosting>(GradientBoosting::from_json(j));
  if (kind == "svm_ovr" || kind == "svm_ovo") return std::make_unique<LinearSvm>(LinearSvm::from_json(j));
  throw ConfigError("unknown model kind '" + kind + "'");
}

}  // namespace

FeaturizedClassifier::FeaturizedClassifier(std::unique_ptr<VectorModel> model, Featurizer featurizer,
                                           std::shared_ptr<const Embedder> embedder)
    : model_(std::move(model)), featurizer_(featurizer), embedder_(std::move(embedder)) {
  if (!model_) throw std::invalid_argument("null model");
  if (featurizer_ == Featurizer::embedded && !embedder_) throw std::invalid_argument("embedded featurizer needs an embedder");
}

FeaturizedClassifier::FeaturizedClassifier(const FeaturizedClassifier& other)
    : model_(other.model_->clone()),
      featurizer_(other.featurizer_),
      embedder_(other.embedder_),
      num_classes_(other.num_classes_),
      input_dim_(other.input_dim_) {}

Matrix FeaturizedClassifier::features(const Dataset& d) const {
  Encoder enc(d.schema());
  switch (featurizer_) {
    case Featurizer::encoded: return enc.encode(d);
    case Featurizer::one_hot: return enc.one_hot(d);
    case Featurizer::embedded:
      if (embedder_->schema().size() != d.num_features())
        throw std::invalid_argument("embedder expects " + std::to_string(embedder_->schema().size()) +
                                    " features, dataset has " + std::to_string(d.num_features()));
      return embedder_->embed(enc.encode(d));
  }
  return {};
}

void FeaturizedClassifier::fit(const Dataset& train) {
  Matrix x = features(train);
  num_classes_ = train.num_classes();
  input_dim_ = static_cast<std::size_t>(x.cols());
  model_->fit(x, train.targets(), num_classes_);
}

Matrix FeaturizedClassifier::predict_scores(const Dataset& d) const {
  Matrix x = features(d);
  if (static_cast<std::size_t>(x.cols()) != input_dim_)
    throw std::invalid_argument("feature width " + std::to_string(x.cols()) + " does not match the fitted width " +
                                std::to_string(input_dim_));
  return model_->scores(x);
}

std::string FeaturizedClassifier::name() const {
  return featurizer_ == Featurizer::embedded ? model_->name() + "+embedding" : model_->name();
}

nlohmann::json FeaturizedClassifier::to_json() const {
  nlohmann::json j{{"kind", "featurized"},
                   {"featurizer", featurizer_name(featurizer_)},
                   {"num_classes", num_classes_},
                   {"input_dim", input_dim_},
                   {"model", model_->to_json()}};
  if (embedder_) j["embedder"] = embedder_->to_json();
  return j;
}

std::unique_ptr<FeaturizedClassifier> FeaturizedClassifier::from_json(const nlohmann::json& j) {
  std::shared_ptr<const Embedder> emb;
  if (j.contains("embedder")) emb = std::make_shared<const Embedder>(Embedder::from_json(j.at("embedder")));
  auto fc = std::make_unique<FeaturizedClassifier>(vector_model_from_json(j.at("model")),
                                                   featurizer_from(j.at("featurizer").get<std::string>()), emb);
  fc->num_classes_ = j.at("num_classes").get<int>();
  fc->input_dim_ = j.at("input_dim").get<std::size_t>();
  return fc;
}

void NnClassifier::fit(const Dataset& train) {
  cfg_.output_classes = train.num_classes();
  model_ = std::make_shared<nn::NnModel>(train.schema(), cfg_, derive_seed(tcfg_.seed, 1));
  fits_ = 1;
  history_ = nn::fit_classifier(*model_, Encoder(train.schema()).encode(train), train.targets(), tcfg_);
}

void NnClassifier::fit_more(const Dataset& train) {
  if (!model_) {
    fit(train);
    return;
  }
  // Clones and exported embedders may share the network.
  model_ = std::make_shared<nn::NnModel>(*model_);
  nn::TrainConfig t = tcfg_;
  t.seed = derive_seed(tcfg_.seed, 100 + fits_++);
  history_ = nn::fit_classifier(*model_, Encoder(train.schema()).encode(train), train.targets(), t);
}

Matrix NnClassifier::predict_scores(const Dataset& d) const {
  if (!model_) throw std::logic_error("nn classifier is not fitted");
  return model_->predict_proba(Encoder(d.schema()).encode(d));
}

nlohmann::json NnClassifier::to_json() const {
  nlohmann::json j{{"kind", "nn"}, {"config", nn::to_json(cfg_)}, {"train", nn::to_json(tcfg_)}};
  if (model_) j["checkpoint"] = nn::to_checkpoint(*model_);
  return j;
}

std::unique_ptr<Classifier> embed_preprocess(const Classifier& prototype, std::shared_ptr<const Embedder> embedder) {
  if (!embedder) throw std::invalid_argument("null embedder");
  const auto* fc = dynamic_cast<const FeaturizedClassifier*>(&prototype);
  if (!fc) throw UnsupportedError("classifier '" + prototype.name() + "' cannot take embedded inputs");
  return std::make_unique<FeaturizedClassifier>(fc->model().clone(), Featurizer::embedded, std::move(embedder));
}

std::vector<double> per_sample_loss(const Classifier& c, const Dataset& d) {
  Matrix s = c.predict_scores(d);
  // Scores that are not probabilities (SVM margins) go through a softmax.
  bool probabilities = (s.array() >= 0.0).all() && ((s.rowwise().sum().array() - 1.0).abs() < 1e-6).all();
  if (!probabilities) s = nn::softmax_rows(s);
  std::vector<double> loss(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    loss[i] = -std::log(std::max(1e-12, s(static_cast<Eigen::Index>(i), d[i].target)));
  return loss;
}

std::vector<std::string> classifier_names() {
  return {"nn", "decision_tree", "random_forest", "gradient_boosting", "svm_ovr", "svm_ovo"};
}

std::unique_ptr<Classifier> make_classifier(const std::string& name, const nlohmann::json& config,
                                            std::uint64_t seed) {
  const nlohmann::json cfg = config.is_null() ? nlohmann::json::object() : config;
  if (name == "nn") {
    check_keys(cfg, {"model", "train"}, "nn classifier config");
    auto model = nn::nn_config_from_json(cfg.value("model", nlohmann::json::object()));
    auto train = nn::train_config_from_json(cfg.value("train", nlohmann::json::object()));
    train.seed = seed;
    return std::make_unique<NnClassifier>(model, train);
  }
  if (name == "decision_tree") {
    check_keys(cfg, {"max_depth", "min_leaf", "min_split", "max_features"}, "decision_tree config");
    TreeConfig c;
    c.max_depth = get_or(cfg, "max_depth", c.max_depth);
    c.min_leaf = get_or(cfg, "min_leaf", c.min_leaf);
    c.min_split = get_or(cfg, "min_split", c.min_split);
    c.max_features = get_or(cfg, "max_features", c.max_features);
    c.seed = seed;
    if (c.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
    return std::make_unique<FeaturizedClassifier>(std::make_unique<DecisionTree>(c), Featurizer::encoded);
  }
  if (name == "random_forest") {
    check_keys(cfg, {"n_trees", "feature_subset", "max_depth", "min_leaf", "bootstrap", "majority_vote"},
               "random_forest config");
    ForestConfig c;
    c.n_trees = get_or(cfg, "n_trees", c.n_trees);
    c.feature_subset = get_or(cfg, "feature_subset", c.feature_subset);
    c.max_depth = get_or(cfg, "max_depth", c.max_depth);
    c.min_leaf = get_or(cfg, "min_leaf", c.min_leaf);
    c.bootstrap = get_or(cfg, "bootstrap", c.bootstrap);
    c.majority_vote = get_or(cfg, "majority_vote", c.majority_vote);
    c.seed = seed;
    if (c.n_trees < 1) throw ConfigError("n_trees must be >= 1");
    if (c.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
    return std::make_unique<FeaturizedClassifier>(std::make_unique<RandomForest>(c), Featurizer::encoded);
  }
  if (name == "gradient_boosting") {
    check_keys(cfg, {"n_rounds", "learning_rate", "max_depth", "min_leaf"}, "gradient_boosting config");
    BoostingConfig c;
    c.n_rounds = get_or(cfg, "n_rounds", c.n_rounds);
    c.learning_rate = get_or(cfg, "learning_rate", c.learning_rate);
    c.max_depth = get_or(cfg, "max_depth", c.max_depth);
    c.min_leaf = get_or(cfg, "min_leaf", c.min_leaf);
    c.seed = seed;
    if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    return std::make_unique<FeaturizedClassifier>(std::make_unique<GradientBoosting>(c), Featurizer::encoded);
  }
  if (name == "svm_ovr" || name == "svm_ovo") {
    check_keys(cfg, {"c", "epochs"}, name + " config");
    SvmConfig c;
    c.mode = name == "svm_ovr" ? SvmMode::ovr : SvmMode::ovo;
    c.c = get_or(cfg, "c", c.c);
    c.epochs = get_or(cfg, "epochs", c.epochs);
    c.seed = seed;
    if (!(c.c > 0.0)) throw ConfigError("svm C must be positive");
    return std::make_unique<FeaturizedClassifier>(std::make_unique<LinearSvm>(c), Featurizer::one_hot);
  }
  throw ConfigError("unknown classifier '" + name + "'");
}

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "nn") {
    auto c = std::make_unique<NnClassifier>(nn::nn_config_from_json(j.at("config")),
                                            nn::train_config_from_json(j.at("train")));
    if (j.contains("checkpoint"))
      c->set_model(std::make_shared<nn::NnModel>(nn::nn_model_from_checkpoint(j.at("checkpoint"))));
    return c;
  }
  if (kind == "featurized") return FeaturizedClassifier::from_json(j);
  throw ConfigError("unknown classifier kind '" + kind + "'");
}

}  // namespace sedg
