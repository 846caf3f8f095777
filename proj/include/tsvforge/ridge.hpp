#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tsvforge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Closed-form multi-output ridge regression on standardized features.
///
/// Features are centred and scaled with the statistics of the training matrix;
/// the intercept is left unpenalized. `weights()` is [(feat_dim + 1) x out_dim]
/// in standardized feature space with the intercept as the last row.
class RidgeHead {
public:
  RidgeHead() = default;
  RidgeHead(double alpha, Vector feature_mean, Vector feature_scale, Matrix weights);

  Matrix predict(const Matrix& X) const;

  double alpha() const noexcept { return alpha_; }
  const Vector& feature_mean() const noexcept { return mean_; }
  const Vector& feature_scale() const noexcept { return scale_; }
  const Matrix& weights() const noexcept { return weights_; }
  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(weights_.cols()); }

  /// Standardizes X with this head's training statistics.
  Matrix standardize(const Matrix& X) const;

private:
  double alpha_ = 0.0;
  Vector mean_;
  Vector scale_;
  Matrix weights_;
};

/// Solves (Xs^T Xs + alpha I) W = Xs^T (Y - mean(Y)) by Cholesky, where Xs is
/// the standardized X. Throws NumericError if the system is not positive definite.
RidgeHead ridge_fit(const Matrix& X, const Matrix& Y, double alpha);

/// ||(Xs^T Xs + alpha I) W - Xs^T Yc|| relative to the magnitude of its terms,
/// evaluated on the training matrices of `head`.
double normal_equation_residual(const RidgeHead& head, const Matrix& X, const Matrix& Y);

/// {0.1, 0.2, 0.5, 1, 2, 5, ..., 500, 1000}
std::vector<double> default_alpha_grid();

struct AlphaSearchResult {
  double best_alpha = 0.0;
  RidgeHead head;
  std::vector<double> scores; // sqrt(MSE) + MAE on validation, per grid entry
};

/// One head per alpha on train, scored by sqrt(MSE) + MAE on validation; the
/// smallest alpha wins ties. The returned head is the train-only fit.
AlphaSearchResult alpha_search(const Matrix& X_train, const Matrix& Y_train, const Matrix& X_val,
                               const Matrix& Y_val, std::span<const double> grid);

} // namespace tsvforge
