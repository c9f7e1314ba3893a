#ifndef TSR_DIFF_ADAM_HPP
#define TSR_DIFF_ADAM_HPP

#include <cstdint>
#include <map>
#include <utility>

#include "tsr/diff/graph.hpp"
#include "tsr/diff/params.hpp"

namespace tsr {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates per parameter plus the shared step counter.
struct AdamState {
  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
  AdamConfig config;
  int64_t step = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments;  // (m, v)
};

// Standard bias-corrected Adam update, applied in sorted parameter-name order.
// Parameters without a gradient entry are left untouched.
void adam_step(AdamState& state, ParameterStore& params, const GradMap& grads);

}  // namespace tsr

#endif  // TSR_DIFF_ADAM_HPP
