#include "tsr/match/score.hpp"

#include <cmath>

#include "tsr/common.hpp"

namespace tsr {

MatchResult matching_score(const Tensor& fused, const Tensor& text, const MatchConfig& cfg) {
  cfg.validate();
  Tensor sim = cosine_matrix(fused, text);
  Tensor cost_values(sim.rows(), sim.cols(), 0.0);
  for (size_t i = 0; i < sim.size(); ++i) cost_values[i] = 1.0 - sim[i];
  CostMatrix cost{std::move(cost_values), CostMatrix::Rule::kOneMinusCosine};

  int n = sim.rows(), m = sim.cols();
  std::vector<double> r(n, 1.0 / n), c(m, 1.0 / m);
  MatchResult out;
  out.transport = sinkhorn_plan(cost, r, c, cfg);

  const Tensor& p = out.transport.plan;
  for (size_t i = 0; i < p.size(); ++i) {
    out.emd += p[i] * cost.values[i];
    out.sim_term += p[i] * sim[i];
  }
  out.loss = out.emd - cfg.lambda * out.sim_term;
  out.score = -out.loss;
  return out;
}

double pooled_cosine(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    throw ShapeError("pooled_cosine: embedding widths differ (" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.cols()) + ")");
  auto pool = [](const Tensor& t) {
    Tensor out(1, t.cols(), 0.0);
    for (int i = 0; i < t.rows(); ++i)
      for (int j = 0; j < t.cols(); ++j) out[j] += t.at(i, j);
    for (int j = 0; j < t.cols(); ++j) out[j] /= static_cast<double>(t.rows());
    return out;
  };
  return cosine_matrix(pool(a), pool(b)).at(0, 0);
}

double combined_loss(double l_emd, double l_cos, const MatchConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(l_emd) || !std::isfinite(l_cos))
    throw NumericError("combined_loss: non-finite loss term");
  return cfg.alpha * l_emd + (1.0 - cfg.alpha) * l_cos;
}

Graph::NodeId build_pooled_cosine(Graph& g, Graph::NodeId a, Graph::NodeId b) {
  Graph::NodeId pa = g.l2_normalize_rows(g.mean(a, 0));
  Graph::NodeId pb = g.l2_normalize_rows(g.mean(b, 0));
  return g.matmul(pa, pb, false, true);
}

MatchingGraph build_matching_loss(Graph& g, Graph::NodeId fused, Graph::NodeId text,
                                  const MatchConfig& cfg) {
  cfg.validate();
  Graph::NodeId sim = g.matmul(g.l2_normalize_rows(fused), g.l2_normalize_rows(text), false, true);
  Graph::NodeId cost = g.affine(sim, -1.0, 1.0);

  // Fix the unroll length with a plain solver run on the evaluated cost.
  Tensor cost_value = g.evaluate(cost);
  int n = cost_value.rows(), m = cost_value.cols();
  std::vector<double> r(n, 1.0 / n), c(m, 1.0 / m);
  MatchConfig probe_cfg = cfg;
  probe_cfg.accelerated = false;
  TransportPlan probe =
      sinkhorn_plan(CostMatrix{cost_value, CostMatrix::Rule::kGeneric}, r, c, probe_cfg);

  Graph::NodeId K = g.affine(cost, -1.0 / cfg.epsilon);
  Graph::NodeId log_r = g.constant(Tensor(n, 1, std::vector<double>(n, std::log(1.0 / n))));
  Graph::NodeId log_c = g.constant(Tensor(1, m, std::vector<double>(m, std::log(1.0 / m))));
  Graph::NodeId u = -1;
  Graph::NodeId v = g.constant(Tensor(1, m, 0.0));
  for (int t = 0; t < probe.iterations; ++t) {
    Graph::NodeId kv = g.add(K, v);  // n x m
    Graph::NodeId mxr = g.max(kv, 1);
    Graph::NodeId sr = g.sum(g.exp(g.sub(kv, mxr)), 1);
    u = g.sub(log_r, g.add(g.log(sr), mxr));  // n x 1

    Graph::NodeId ku = g.add(K, u);  // n x m
    Graph::NodeId mxc = g.max(ku, 0);
    Graph::NodeId sc = g.sum(g.exp(g.sub(ku, mxc)), 0);
    v = g.sub(log_c, g.add(g.log(sc), mxc));  // 1 x m
  }

  MatchingGraph out;
  out.plan = g.exp(g.add(g.add(K, u), v));
  out.emd = g.sum(g.mul(out.plan, cost));
  out.sim_term = g.sum(g.mul(out.plan, sim));
  out.loss = g.sub(out.emd, g.affine(out.sim_term, cfg.lambda));
  out.sim = sim;
  out.cost = cost;
  out.iterations = probe.iterations;
  out.converged = probe.converged;
  return out;
}

}  // namespace tsr
