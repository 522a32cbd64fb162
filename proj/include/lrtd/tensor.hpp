#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace lrtd {

// Dense row-major tensor of doubles. Rank is usually 2 (matrices); column
// vectors are n x 1. All values must stay finite; ops check this and throw
// NumericError on violation.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols);
  Tensor(int rows, int cols, std::vector<double> values);
  Tensor(std::initializer_list<std::initializer_list<double>> rows);

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
  static Tensor column(std::vector<double> values);
  static Tensor scalar(double v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

  void fill(double v);
  bool all_finite() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Throws NumericError naming `what` if t contains NaN or Inf.
void require_finite(const Tensor& t, const char* what);

// Throws DimensionError unless shapes match.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace lrtd
