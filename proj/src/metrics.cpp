#include "tsvforge/metrics.hpp"

#include <string>

#include "tsvforge/error.hpp"

namespace tsvforge {

namespace {

void check(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw DimensionError("prediction is " + std::to_string(pred.rows()) + "x" + std::to_string(pred.cols()) +
                         ", truth is " + std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
  if (pred.size() == 0) throw ContractViolation("metrics need at least one entry");
}

} // namespace

double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  check(pred, truth);
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

double mae(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  check(pred, truth);
  return (pred - truth).cwiseAbs().sum() / static_cast<double>(pred.size());
}

} // namespace tsvforge
