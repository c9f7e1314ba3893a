#include "tsr/diff/tensor.hpp"

#include <cmath>
#include <utility>

namespace tsr {

Tensor::Tensor(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
  if (rows <= 0 || cols <= 0)
    throw ShapeError("tensor extents must be positive, got " + shape_str());
  if (!std::isfinite(fill)) throw NumericError("tensor fill value is not finite");
}

Tensor::Tensor(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows <= 0 || cols <= 0)
    throw ShapeError("tensor extents must be positive, got " + shape_str());
  if (data_.size() != static_cast<size_t>(rows) * cols)
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str());
  check_finite("tensor construction");
}

Tensor Tensor::row(std::vector<double> v) {
  return Tensor(1, static_cast<int>(v.size()), std::move(v));
}

Tensor Tensor::column(std::vector<double> v) {
  return Tensor(static_cast<int>(v.size()), 1, std::move(v));
}

Tensor Tensor::scalar(double v) { return Tensor(1, 1, {v}); }

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1)
    throw ShapeError("item() requires a 1x1 tensor, got " + shape_str());
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::check_finite(const std::string& context) const {
  if (!all_finite()) throw NumericError("non-finite value in " + context);
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(rows_) + ", " + std::to_string(cols_) + "]";
}

}  // namespace tsr
