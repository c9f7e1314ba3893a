#include "tsr/diff/adam.hpp"

#include <cmath>

namespace tsr {

void adam_step(AdamState& state, ParameterStore& params, const GradMap& grads) {
  const AdamConfig& c = state.config;
  state.step += 1;
  double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (const auto& [name, g] : grads) {
    Tensor& p = params.value(name);  // throws on unknown name
    if (!p.same_shape(g))
      throw ShapeError("adam_step: gradient shape " + g.shape_str() +
                       " does not match parameter '" + name + "' " + p.shape_str());
    auto it = state.moments.find(name);
    if (it == state.moments.end()) {
      it = state.moments
               .emplace(name, std::make_pair(Tensor(p.rows(), p.cols(), 0.0),
                                             Tensor(p.rows(), p.cols(), 0.0)))
               .first;
    }
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;
    if (!m.same_shape(g))
      throw ShapeError("adam_step: stale moment shape for parameter '" + name + "'");
    for (size_t i = 0; i < g.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
    p.check_finite("adam_step update of '" + name + "'");
  }
}

}  // namespace tsr
