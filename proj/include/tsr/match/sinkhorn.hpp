#ifndef TSR_MATCH_SINKHORN_HPP
#define TSR_MATCH_SINKHORN_HPP

#include <vector>

#include "tsr/diff/tensor.hpp"

namespace tsr {

struct MatchConfig {
  double lambda = 1.0;     // weight of the similarity term in the match score
  double alpha = 0.5;      // weight between the two combined-objective terms
  double epsilon = 0.05;   // entropic regularization strength
  int max_iters = 200;
  double tolerance = 1e-6;  // max marginal violation; 0 forces all iterations
  // Anderson acceleration for the standalone solver. The differentiable
  // unrolled path always replicates plain sweeps, so training configs switch
  // this off to keep solver values and graph values identical.
  bool accelerated = true;
  void validate() const;
};

struct CostMatrix {
  enum class Rule { kGeneric, kOneMinusCosine };
  Tensor values;  // n x m
  Rule rule = Rule::kGeneric;
  void validate() const;  // one-minus-cosine entries must lie in [0, 2]
};

// sim_ij = <a_i, b_j> / (|a_i| |b_j|), norms clamped below by 1e-12, values
// clamped to [-1, 1].
Tensor cosine_matrix(const Tensor& a, const Tensor& b);

CostMatrix one_minus_cosine_cost(const Tensor& a, const Tensor& b);

struct TransportPlan {
  Tensor plan;  // n x m, nonnegative, total mass 1
  std::vector<double> row_marginals, col_marginals;
  double violation = 0.0;  // achieved max marginal violation
  int iterations = 0;
  bool converged = false;
};

// Entropic optimal transport via log-domain Sinkhorn sweeps. With
// cfg.accelerated, sweeps are wrapped in safeguarded Anderson acceleration
// (memory 5): each candidate is followed by one stabilizing plain sweep and
// accepted only if it reduces the marginal violation, so the solver is never
// worse than plain iteration. Non-convergence within max_iters is reported
// through `converged`, not an error.
TransportPlan sinkhorn_plan(const CostMatrix& cost, const std::vector<double>& r,
                            const std::vector<double>& c, const MatchConfig& cfg);

namespace detail {
// One plain sweep (u update from v, then v update from u), written to mirror
// the unrolled graph ops exactly so both paths agree bitwise.
void sinkhorn_sweep(const Tensor& K, const std::vector<double>& log_r,
                    const std::vector<double>& log_c, std::vector<double>& u,
                    std::vector<double>& v);
double plan_violation(const Tensor& K, const std::vector<double>& u,
                      const std::vector<double>& v, const std::vector<double>& r,
                      const std::vector<double>& c, Tensor* plan_out);
}  // namespace detail

}  // namespace tsr

#endif  // TSR_MATCH_SINKHORN_HPP
