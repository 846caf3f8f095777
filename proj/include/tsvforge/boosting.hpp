#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "tsvforge/ridge.hpp"

namespace tsvforge {

struct BoostingConfig {
  std::size_t n_trees = 100;
  std::size_t depth = 3;
  double shrinkage = 0.1;
  std::size_t min_samples_leaf = 1;

  void validate() const;
};

/// Row indices of a feature matrix sorted by each column, computed once and
/// reused by every tree of a booster.
struct FeatureOrder {
  std::vector<std::vector<Eigen::Index>> sorted;

  static FeatureOrder of(const Matrix& X);
};

/// Greedy least-squares regression tree; rows with x[feature] <= threshold go left.
class RegressionTree {
public:
  struct Node {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0; // mean target of the rows that reached this node
  };

  /// Level-by-level growth to `depth`; each node takes the split with the
  /// largest squared-error reduction over midpoints between distinct values.
  static RegressionTree fit(const Matrix& X, const Vector& target, const FeatureOrder& order, std::size_t depth,
                            std::size_t min_samples_leaf = 1);

  double predict_row(const Matrix& X, Eigen::Index row) const;
  Vector predict(const Matrix& X) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_count() const;

private:
  std::vector<Node> nodes_;
};

/// Shrunken sum of trees fit to a running residual.
class ResidualBooster {
public:
  ResidualBooster() = default;
  ResidualBooster(double shrinkage, std::vector<RegressionTree> trees);

  Vector predict(const Matrix& X) const;

  double shrinkage() const noexcept { return shrinkage_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

private:
  double shrinkage_ = 0.1;
  std::vector<RegressionTree> trees_;
};

struct BoosterFit {
  ResidualBooster booster;
  std::vector<double> train_mse; // residual MSE before any tree, then after each tree
};

/// Boosts on `residual` until n_trees or the running residual is constant (a
/// constant residual yields zero trees).
BoosterFit fit_residual_booster(const Matrix& X, const Vector& residual, const BoostingConfig& config,
                                const FeatureOrder* order = nullptr);

/// Stage-1 linear head plus one residual booster per output column.
class BoostedResidualModel {
public:
  BoostedResidualModel() = default;
  BoostedResidualModel(RidgeHead base, std::vector<ResidualBooster> correctors);

  Matrix predict(const Matrix& X) const;

  const RidgeHead& base() const noexcept { return base_; }
  const std::vector<ResidualBooster>& correctors() const noexcept { return correctors_; }

private:
  RidgeHead base_;
  std::vector<ResidualBooster> correctors_;
};

/// Fits the correctors on target - stage1.predict(features), column by column.
BoostedResidualModel boosted_residual_fit(const Matrix& features, const Matrix& target, RidgeHead stage1,
                                          const BoostingConfig& config);

} // namespace tsvforge
