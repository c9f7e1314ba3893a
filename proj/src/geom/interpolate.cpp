#include "tsr/geom/interpolate.hpp"

#include <algorithm>
#include <cmath>

#include "tsr/common.hpp"

namespace tsr {
namespace {

constexpr double kSnapDistance = 1e-8;

struct WeightedNeighbors {
  std::vector<int> indices;
  std::vector<double> weights;  // normalized
};

WeightedNeighbors neighbor_weights(const Tensor& source_positions, const double* q, int k,
                                   double p) {
  int n = source_positions.rows();
  std::vector<std::pair<double, int>> order(n);
  for (int i = 0; i < n; ++i) {
    const double* s = source_positions.data() + 3 * static_cast<size_t>(i);
    double dx = s[0] - q[0], dy = s[1] - q[1], dz = s[2] - q[2];
    order[i] = {dx * dx + dy * dy + dz * dz, i};
  }
  std::partial_sort(order.begin(), order.begin() + k, order.end());

  WeightedNeighbors out;
  if (std::sqrt(order[0].first) < kSnapDistance) {
    out.indices = {order[0].second};
    out.weights = {1.0};
    return out;
  }
  std::vector<double> raw(k);
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    raw[j] = 1.0 / std::pow(std::sqrt(order[j].first), p);
    total += raw[j];
  }
  out.indices.resize(k);
  out.weights.resize(k);
  for (int j = 0; j < k; ++j) {
    out.indices[j] = order[j].second;
    out.weights[j] = raw[j] / total;
  }
  return out;
}

void check_args(const Tensor& source_positions, const Tensor& queries, int k, double p) {
  if (source_positions.cols() != 3 || queries.cols() != 3)
    throw DataError("feature propagation: positions and queries must have 3 columns");
  if (k < 1 || k > source_positions.rows())
    throw DataError("feature propagation: k=" + std::to_string(k) + " outside [1, " +
                    std::to_string(source_positions.rows()) + "]");
  if (!(p > 0.0)) throw ConfigError("feature propagation: p must be positive");
}

}  // namespace

Tensor propagate_features(const PointCloud& source, const Tensor& queries, int k, double p) {
  if (!source.features)
    throw DataError("feature propagation: source cloud has no features");
  check_args(source.positions, queries, k, p);
  const Tensor& f = *source.features;
  int d = f.cols();
  Tensor out(queries.rows(), d, 0.0);
  for (int r = 0; r < queries.rows(); ++r) {
    auto nb = neighbor_weights(source.positions, queries.data() + 3 * static_cast<size_t>(r),
                               k, p);
    const double* fn = f.data() + static_cast<size_t>(nb.indices[0]) * d;
    double* orow = out.data() + static_cast<size_t>(r) * d;
    for (int c = 0; c < d; ++c) orow[c] = fn[c];
    // delta form: exact when all neighbor features coincide
    for (size_t j = 1; j < nb.indices.size(); ++j) {
      const double* fj = f.data() + static_cast<size_t>(nb.indices[j]) * d;
      for (int c = 0; c < d; ++c) orow[c] += nb.weights[j] * (fj[c] - fn[c]);
    }
  }
  return out;
}

std::shared_ptr<GatherPlan> interpolation_plan(const Tensor& source_positions,
                                               const Tensor& queries, int k, double p) {
  check_args(source_positions, queries, k, p);
  auto plan = std::make_shared<GatherPlan>();
  plan->offsets.push_back(0);
  for (int r = 0; r < queries.rows(); ++r) {
    auto nb = neighbor_weights(source_positions, queries.data() + 3 * static_cast<size_t>(r),
                               k, p);
    for (size_t j = 0; j < nb.indices.size(); ++j) {
      plan->indices.push_back(nb.indices[j]);
      plan->weights.push_back(nb.weights[j]);
    }
    plan->offsets.push_back(static_cast<int>(plan->indices.size()));
  }
  return plan;
}

GroupPlan group_plan(const std::vector<int>& segment_labels, double min_fraction) {
  if (segment_labels.empty()) throw DataError("group pooling: no labels");
  int n = static_cast<int>(segment_labels.size());
  std::vector<int> count(kSegmentClasses, 0);
  for (int l : segment_labels) {
    if (l < 0 || l >= kSegmentClasses)
      throw DataError("group pooling: segment label " + std::to_string(l) +
                      " outside [0, " + std::to_string(kSegmentClasses) + ")");
    ++count[l];
  }
  GroupPlan out;
  out.plan = std::make_shared<GatherPlan>();
  out.plan->offsets.push_back(0);
  for (int s = 0; s < kSegmentClasses; ++s) {
    if (count[s] == 0) continue;
    if (static_cast<double>(count[s]) / n < min_fraction) continue;
    double w = 1.0 / count[s];
    for (int i = 0; i < n; ++i) {
      if (segment_labels[i] != s) continue;
      out.plan->indices.push_back(i);
      out.plan->weights.push_back(w);
    }
    out.plan->offsets.push_back(static_cast<int>(out.plan->indices.size()));
    out.segment_ids.push_back(s);
  }
  if (out.segment_ids.empty())
    throw DataError("group pooling: every segment falls below the minimum fraction");
  return out;
}

GroupPoolResult group_pool(const Tensor& features, const std::vector<int>& segment_labels,
                           double min_fraction) {
  if (static_cast<int>(segment_labels.size()) != features.rows())
    throw DataError("group pooling: label count does not match feature rows");
  GroupPlan gp = group_plan(segment_labels, min_fraction);
  const GatherPlan& plan = *gp.plan;
  int d = features.cols();
  Tensor pooled(plan.out_rows(), d, 0.0);
  for (int r = 0; r < plan.out_rows(); ++r) {
    double* orow = pooled.data() + static_cast<size_t>(r) * d;
    for (int e = plan.offsets[r]; e < plan.offsets[r + 1]; ++e) {
      const double* srow = features.data() + static_cast<size_t>(plan.indices[e]) * d;
      for (int c = 0; c < d; ++c) orow[c] += plan.weights[e] * srow[c];
    }
  }
  return {std::move(pooled), std::move(gp.segment_ids)};
}

}  // namespace tsr
