#ifndef TSR_DIFF_PARAMS_HPP
#define TSR_DIFF_PARAMS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsr/diff/tensor.hpp"

namespace tsr {

// Named trainable tensors. Iteration order is sorted by name (std::map), which
// pins the update order and makes training bit-reproducible. Initialization is
// seeded per parameter name, so adding a parameter never reshuffles the draws
// of existing ones.
class ParameterStore {
 public:
  explicit ParameterStore(uint64_t seed = 0) : seed_(seed) {}

  // Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  Tensor& create_uniform(const std::string& name, int rows, int cols, int fan_in);
  Tensor& create_zeros(const std::string& name, int rows, int cols);
  Tensor& create_const(const std::string& name, int rows, int cols, double value);

  bool has(const std::string& name) const { return values_.count(name) != 0; }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  void set(const std::string& name, Tensor t);

  size_t count() const { return values_.size(); }
  size_t scalar_count() const;
  std::vector<std::string> names() const;  // sorted
  uint64_t seed() const { return seed_; }

  const std::map<std::string, Tensor>& entries() const { return values_; }

 private:
  Tensor& insert(const std::string& name, Tensor t);
  uint64_t seed_;
  std::map<std::string, Tensor> values_;
};

}  // namespace tsr

#endif  // TSR_DIFF_PARAMS_HPP
