#include "tsr/diff/params.hpp"

#include <cmath>

#include "tsr/common.hpp"

namespace tsr {

Tensor& ParameterStore::insert(const std::string& name, Tensor t) {
  auto [it, fresh] = values_.emplace(name, std::move(t));
  if (!fresh) throw ConfigError("parameter '" + name + "' already exists");
  return it->second;
}

Tensor& ParameterStore::create_uniform(const std::string& name, int rows, int cols,
                                       int fan_in) {
  if (fan_in <= 0) throw ConfigError("parameter '" + name + "': fan_in must be positive");
  Rng rng(Rng::derive(seed_, name));
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(rows, cols);
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return insert(name, std::move(t));
}

Tensor& ParameterStore::create_zeros(const std::string& name, int rows, int cols) {
  return insert(name, Tensor(rows, cols, 0.0));
}

Tensor& ParameterStore::create_const(const std::string& name, int rows, int cols,
                                     double value) {
  return insert(name, Tensor(rows, cols, value));
}

Tensor& ParameterStore::value(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParameterStore::value(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

void ParameterStore::set(const std::string& name, Tensor t) {
  auto it = values_.find(name);
  if (it == values_.end()) {
    values_.emplace(name, std::move(t));
    return;
  }
  if (!it->second.same_shape(t))
    throw ShapeError("parameter '" + name + "': shape " + t.shape_str() +
                     " does not match existing " + it->second.shape_str());
  it->second = std::move(t);
}

size_t ParameterStore::scalar_count() const {
  size_t n = 0;
  for (const auto& [name, t] : values_) n += t.size();
  return n;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [name, t] : values_) out.push_back(name);
  return out;
}

}  // namespace tsr
