#include "tsvforge/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tsvforge/error.hpp"

namespace tsvforge {

void BoostingConfig::validate() const {
  if (depth < 1) throw ConfigError("boosting depth must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ConfigError("boosting shrinkage must lie in (0, 1]");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
}

FeatureOrder FeatureOrder::of(const Matrix& X) {
  FeatureOrder order;
  order.sorted.resize(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& idx = order.sorted[static_cast<std::size_t>(f)];
    idx.resize(static_cast<std::size_t>(X.rows()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return X(a, f) < X(b, f); });
  }
  return order;
}

namespace {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct SlotStats {
  double sum = 0.0;
  double sumsq = 0.0;
  std::size_t count = 0;
};

} // namespace

RegressionTree RegressionTree::fit(const Matrix& X, const Vector& target, const FeatureOrder& order,
                                   std::size_t depth, std::size_t min_samples_leaf) {
  const Eigen::Index n = X.rows();
  if (target.size() != n) throw DimensionError("tree target length does not match the feature rows");
  if (n < 1) throw ContractViolation("tree needs at least one row");
  if (order.sorted.size() != static_cast<std::size_t>(X.cols())) throw DimensionError("feature order does not match X");

  RegressionTree tree;
  tree.nodes_.push_back(Node{.value = target.mean()});
  std::vector<int> node_of(static_cast<std::size_t>(n), 0);
  std::vector<int> frontier{0};

  for (std::size_t level = 0; level < depth && !frontier.empty(); ++level) {
    std::vector<int> slot_of(tree.nodes_.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);

    std::vector<SlotStats> total(frontier.size());
    for (Eigen::Index r = 0; r < n; ++r) {
      const int s = slot_of[static_cast<std::size_t>(node_of[static_cast<std::size_t>(r)])];
      if (s < 0) continue;
      auto& st = total[static_cast<std::size_t>(s)];
      st.sum += target(r);
      st.sumsq += target(r) * target(r);
      ++st.count;
    }

    std::vector<SplitCandidate> best(frontier.size());
    std::vector<SlotStats> left(frontier.size());
    std::vector<double> last(frontier.size());
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
      std::fill(left.begin(), left.end(), SlotStats{});
      for (const Eigen::Index r : order.sorted[static_cast<std::size_t>(f)]) {
        const int s = slot_of[static_cast<std::size_t>(node_of[static_cast<std::size_t>(r)])];
        if (s < 0) continue;
        const auto slot = static_cast<std::size_t>(s);
        const double v = X(r, f);
        auto& l = left[slot];
        if (l.count > 0 && v > last[slot]) {
          const auto& t = total[slot];
          const std::size_t nr = t.count - l.count;
          if (l.count >= min_samples_leaf && nr >= min_samples_leaf) {
            const double sr = t.sum - l.sum;
            const double gain = l.sum * l.sum / static_cast<double>(l.count) + sr * sr / static_cast<double>(nr) -
                                t.sum * t.sum / static_cast<double>(t.count);
            if (gain > best[slot].gain) {
              double threshold = 0.5 * (last[slot] + v);
              if (!(threshold < v)) threshold = last[slot];
              best[slot] = {gain, static_cast<int>(f), threshold};
            }
          }
        }
        l.sum += target(r);
        ++l.count;
        last[slot] = v;
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const auto& t = total[s];
      const double sse = t.sumsq - t.sum * t.sum / static_cast<double>(t.count);
      // Splits that only shuffle rounding noise are not worth a node.
      if (best[s].feature < 0 || best[s].gain <= 1e-12 * std::max(sse, 1e-300)) continue;
      const int parent = frontier[s];
      const int l = static_cast<int>(tree.nodes_.size());
      tree.nodes_.push_back(Node{});
      tree.nodes_.push_back(Node{});
      auto& node = tree.nodes_[static_cast<std::size_t>(parent)];
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.left = l;
      node.right = l + 1;
      next.push_back(l);
      next.push_back(l + 1);
    }
    if (next.empty()) break;

    std::vector<SlotStats> child(tree.nodes_.size());
    for (Eigen::Index r = 0; r < n; ++r) {
      int& id = node_of[static_cast<std::size_t>(r)];
      const Node& node = tree.nodes_[static_cast<std::size_t>(id)];
      if (node.feature < 0) continue;
      id = X(r, node.feature) <= node.threshold ? node.left : node.right;
      auto& c = child[static_cast<std::size_t>(id)];
      c.sum += target(r);
      ++c.count;
    }
    for (const int id : next) {
      const auto& c = child[static_cast<std::size_t>(id)];
      tree.nodes_[static_cast<std::size_t>(id)].value = c.sum / static_cast<double>(c.count);
    }
    frontier = std::move(next);
  }
  return tree;
}

double RegressionTree::predict_row(const Matrix& X, Eigen::Index row) const {
  std::size_t id = 0;
  while (nodes_[id].feature >= 0) {
    const Node& node = nodes_[id];
    id = static_cast<std::size_t>(X(row, node.feature) <= node.threshold ? node.left : node.right);
  }
  return nodes_[id].value;
}

Vector RegressionTree::predict(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out(r) = predict_row(X, r);
  return out;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

ResidualBooster::ResidualBooster(double shrinkage, std::vector<RegressionTree> trees)
    : shrinkage_(shrinkage), trees_(std::move(trees)) {}

Vector ResidualBooster::predict(const Matrix& X) const {
  Vector out = Vector::Zero(X.rows());
  for (const auto& tree : trees_) out += tree.predict(X);
  return shrinkage_ * out;
}

BoosterFit fit_residual_booster(const Matrix& X, const Vector& residual, const BoostingConfig& config,
                                const FeatureOrder* order) {
  config.validate();
  if (residual.size() != X.rows()) throw DimensionError("residual length does not match the feature rows");
  if (!residual.allFinite()) throw NumericError("residual contains non-finite values");
  FeatureOrder local;
  if (!order) {
    local = FeatureOrder::of(X);
    order = &local;
  }

  BoosterFit fit;
  Vector running = residual;
  std::vector<RegressionTree> trees;
  fit.train_mse.push_back(running.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(running.size(), 1)));
  for (std::size_t k = 0; k < config.n_trees && running.size() > 0; ++k) {
    const double spread = running.maxCoeff() - running.minCoeff();
    if (spread <= 1e-12 * std::max(1.0, running.cwiseAbs().maxCoeff())) break;
    RegressionTree tree = RegressionTree::fit(X, running, *order, config.depth, config.min_samples_leaf);
    running -= config.shrinkage * tree.predict(X);
    fit.train_mse.push_back(running.squaredNorm() / static_cast<double>(running.size()));
    trees.push_back(std::move(tree));
  }
  fit.booster = ResidualBooster(config.shrinkage, std::move(trees));
  return fit;
}

BoostedResidualModel::BoostedResidualModel(RidgeHead base, std::vector<ResidualBooster> correctors)
    : base_(std::move(base)), correctors_(std::move(correctors)) {
  if (correctors_.size() != base_.output_dim())
    throw DimensionError("one residual corrector per output column is required");
}

Matrix BoostedResidualModel::predict(const Matrix& X) const {
  Matrix out = base_.predict(X);
  for (std::size_t k = 0; k < correctors_.size(); ++k) out.col(static_cast<Eigen::Index>(k)) += correctors_[k].predict(X);
  return out;
}

BoostedResidualModel boosted_residual_fit(const Matrix& features, const Matrix& target, RidgeHead stage1,
                                          const BoostingConfig& config) {
  if (target.rows() != features.rows() || static_cast<std::size_t>(target.cols()) != stage1.output_dim())
    throw DimensionError("target shape does not match features and stage-1 head");
  const Matrix residual = target - stage1.predict(features);
  const FeatureOrder order = FeatureOrder::of(features);
  std::vector<ResidualBooster> correctors;
  correctors.reserve(static_cast<std::size_t>(target.cols()));
  for (Eigen::Index k = 0; k < target.cols(); ++k)
    correctors.push_back(fit_residual_booster(features, residual.col(k), config, &order).booster);
  return BoostedResidualModel(std::move(stage1), std::move(correctors));
}

} // namespace tsvforge
