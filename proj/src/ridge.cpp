#include "tsvforge/ridge.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "tsvforge/error.hpp"
#include "tsvforge/metrics.hpp"

namespace tsvforge {

namespace {

// Standardized Gram system shared by every alpha of a search.
struct NormalEquations {
  Vector mean, scale, y_mean;
  Matrix gram;  // Xs^T Xs
  Matrix cross; // Xs^T (Y - y_mean)

  NormalEquations(const Matrix& X, const Matrix& Y) {
    if (X.rows() != Y.rows())
      throw DimensionError("ridge: X has " + std::to_string(X.rows()) + " rows, Y has " + std::to_string(Y.rows()));
    if (X.rows() < 1) throw ContractViolation("ridge needs at least one example");
    const double n = static_cast<double>(X.rows());
    mean = X.colwise().mean().transpose();
    const Matrix centred = X.rowwise() - mean.transpose();
    scale = (centred.colwise().squaredNorm() / n).cwiseSqrt().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
      if (!(scale(j) > 1e-12)) scale(j) = 1.0;
    const Matrix xs = centred.array().rowwise() / scale.transpose().array();
    y_mean = Y.colwise().mean().transpose();
    gram = xs.transpose() * xs;
    cross = xs.transpose() * (Y.rowwise() - y_mean.transpose());
  }

  RidgeHead solve(double alpha) const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ContractViolation("ridge alpha must be finite and >= 0");
    Matrix system = gram;
    system.diagonal().array() += alpha;
    const Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success)
      throw NumericError("ridge normal equations are not positive definite (alpha=" + std::to_string(alpha) + ")");
    Matrix weights(gram.rows() + 1, cross.cols());
    weights.topRows(gram.rows()) = llt.solve(cross);
    weights.bottomRows(1) = y_mean.transpose();
    if (!weights.allFinite()) throw NumericError("ridge solve produced non-finite coefficients");
    return RidgeHead(alpha, mean, scale, std::move(weights));
  }
};

} // namespace

RidgeHead::RidgeHead(double alpha, Vector feature_mean, Vector feature_scale, Matrix weights)
    : alpha_(alpha), mean_(std::move(feature_mean)), scale_(std::move(feature_scale)), weights_(std::move(weights)) {
  if (mean_.size() != scale_.size() || weights_.rows() != mean_.size() + 1)
    throw DimensionError("inconsistent ridge head parts");
}

Matrix RidgeHead::standardize(const Matrix& X) const {
  if (X.cols() != mean_.size())
    throw DimensionError("ridge head expects " + std::to_string(mean_.size()) + " features, got " +
                         std::to_string(X.cols()));
  return (X.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
}

Matrix RidgeHead::predict(const Matrix& X) const {
  const Eigen::Index f = mean_.size();
  Matrix out = standardize(X) * weights_.topRows(f);
  out.rowwise() += weights_.row(f);
  return out;
}

RidgeHead ridge_fit(const Matrix& X, const Matrix& Y, double alpha) { return NormalEquations(X, Y).solve(alpha); }

double normal_equation_residual(const RidgeHead& head, const Matrix& X, const Matrix& Y) {
  const NormalEquations eq(X, Y);
  const Eigen::Index f = eq.gram.rows();
  Matrix system = eq.gram;
  system.diagonal().array() += head.alpha();
  const Matrix coef = head.weights().topRows(f);
  const double residual = (system * coef - eq.cross).norm();
  const double magnitude = std::max({eq.cross.norm(), system.norm() * coef.norm(), std::numeric_limits<double>::min()});
  return residual / magnitude;
}

std::vector<double> default_alpha_grid() {
  return {0.1, 0.2, 0.5, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
}

AlphaSearchResult alpha_search(const Matrix& X_train, const Matrix& Y_train, const Matrix& X_val,
                               const Matrix& Y_val, std::span<const double> grid) {
  if (grid.empty()) throw ContractViolation("alpha grid is empty");
  const NormalEquations eq(X_train, Y_train);
  AlphaSearchResult result;
  double best = std::numeric_limits<double>::infinity();
  for (const double alpha : grid) {
    RidgeHead head = eq.solve(alpha);
    const Matrix pred = head.predict(X_val);
    const double score = std::sqrt(mse(pred, Y_val)) + mae(pred, Y_val);
    result.scores.push_back(score);
    if (score < best || (score == best && alpha < result.best_alpha)) {
      best = score;
      result.best_alpha = alpha;
      result.head = std::move(head);
    }
  }
  return result;
}

} // namespace tsvforge
