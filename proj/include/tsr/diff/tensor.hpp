#ifndef TSR_DIFF_TENSOR_HPP
#define TSR_DIFF_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tsr/common.hpp"

namespace tsr {

// Dense row-major matrix of doubles. Vectors are 1xN or Nx1, scalars 1x1.
// Public construction rejects non-finite values; internal graph evaluation
// writes through raw storage and validates at the API boundary.
class Tensor {
 public:
  Tensor() : rows_(0), cols_(0) {}
  Tensor(int rows, int cols, double fill = 0.0);
  Tensor(int rows, int cols, std::vector<double> data);

  static Tensor row(std::vector<double> v);
  static Tensor column(std::vector<double> v);
  static Tensor scalar(double v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  std::vector<int> shape() const { return {rows_, cols_}; }

  double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  double item() const;  // requires 1x1

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;
  void check_finite(const std::string& context) const;

  std::string shape_str() const;

 private:
  int rows_, cols_;
  std::vector<double> data_;
};

}  // namespace tsr

#endif  // TSR_DIFF_TENSOR_HPP
