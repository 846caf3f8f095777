#pragma once

#include <Eigen/Core>

namespace tsvforge {

/// Mean squared error over all entries; shapes must match and be nonempty.
double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);
/// Mean absolute error over all entries.
double mae(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

} // namespace tsvforge
