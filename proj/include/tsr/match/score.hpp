#ifndef TSR_MATCH_SCORE_HPP
#define TSR_MATCH_SCORE_HPP

#include "tsr/diff/graph.hpp"
#include "tsr/match/sinkhorn.hpp"

namespace tsr {

struct MatchResult {
  double loss = 0.0;      // transport loss: emd - lambda * sim_term
  double score = 0.0;     // -loss; higher means better match
  double emd = 0.0;       // <plan, cost>, entropy excluded
  double sim_term = 0.0;  // <plan, sim>
  TransportPlan transport;
};

// Transport match between two embedding sets: cost = 1 - cosine, uniform
// marginals, entropic plan, loss = <plan, cost> - lambda * <plan, sim>.
MatchResult matching_score(const Tensor& fused, const Tensor& text, const MatchConfig& cfg);

// Cosine similarity between the mean-pooled rows of a and b: the global
// counterpart of the per-part transport score.
double pooled_cosine(const Tensor& a, const Tensor& b);

// alpha * l_emd + (1 - alpha) * l_cos
double combined_loss(double l_emd, double l_cos, const MatchConfig& cfg);

struct MatchingGraph {
  Graph::NodeId loss;      // scalar transport loss node
  Graph::NodeId emd;       // scalar <plan, cost> node
  Graph::NodeId sim_term;  // scalar <plan, sim> node
  Graph::NodeId plan;      // n x m transport plan node
  Graph::NodeId sim;       // n x m cosine matrix node
  Graph::NodeId cost;      // n x m (1 - cosine) node
  int iterations = 0;      // unrolled sweep count
  bool converged = false;  // probe solver reached tolerance
};

// Differentiable version of matching_score: probes a plain (non-accelerated)
// solver for the sweep count, then unrolls exactly that many log-domain
// sweeps as graph ops, so graph values match that probe bitwise. Gradients
// flow through the transport plan. `fused` and `text` must already be
// evaluable. With cfg.tolerance == 0 the unroll length is always
// cfg.max_iters, which keeps the loss a fixed smooth function of its inputs
// (useful for finite-difference checks).
MatchingGraph build_matching_loss(Graph& g, Graph::NodeId fused, Graph::NodeId text,
                                  const MatchConfig& cfg);

// cosine(mean row of a, mean row of b) as a 1x1 graph node.
Graph::NodeId build_pooled_cosine(Graph& g, Graph::NodeId a, Graph::NodeId b);

}  // namespace tsr

#endif  // TSR_MATCH_SCORE_HPP
