#include "lrtd/tensor.hpp"

#include <cmath>
#include <sstream>

#include "lrtd/errors.hpp"

namespace lrtd {

Tensor::Tensor(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw DimensionError("tensor extents must be nonnegative, got " + shape_str());
  }
  data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Tensor::Tensor(int rows, int cols, std::vector<double> values) : rows_(rows), cols_(cols) {
  if (values.size() != static_cast<std::size_t>(rows) * cols) {
    std::ostringstream os;
    os << "tensor data length " << values.size() << " does not match shape " << rows << "x" << cols;
    throw DimensionError(os.str());
  }
  data_ = std::move(values);
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  data_.reserve(static_cast<std::size_t>(rows_) * cols_);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != cols_) {
      throw DimensionError("ragged initializer for tensor");
    }
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Tensor Tensor::column(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return Tensor(n, 1, std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor(1, 1, {v}); }

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value in ") + what);
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shapes " + a.shape_str() + " and " + b.shape_str() +
                         " do not match");
  }
}

}  // namespace lrtd
