#include "tsvforge/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "tsvforge/error.hpp"

namespace tsvforge {

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

} // namespace

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size())
    throw DimensionError("tensor shape " + to_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " elements");
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size())
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + to_string(shape_));
  return shape_[axis];
}

double Tensor::item() const {
  if (data_.size() != 1) throw ContractViolation("item() on non-scalar tensor " + to_string(shape_));
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_)
    throw DimensionError("cannot add " + to_string(other.shape_) + " to " + to_string(shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

MatrixMap as_matrix(Tensor& t) {
  if (t.rank() != 2) throw DimensionError("expected a rank-2 tensor, got " + to_string(t.shape()));
  return MatrixMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                   static_cast<Eigen::Index>(t.dim(1)));
}

ConstMatrixMap as_matrix(const Tensor& t) {
  if (t.rank() != 2) throw DimensionError("expected a rank-2 tensor, got " + to_string(t.shape()));
  return ConstMatrixMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                        static_cast<Eigen::Index>(t.dim(1)));
}

Tensor to_tensor(const Eigen::MatrixXd& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  as_matrix(t) = m;
  return t;
}

Eigen::MatrixXd to_eigen(const Tensor& t) { return as_matrix(t); }

} // namespace tsvforge
