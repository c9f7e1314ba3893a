#ifndef TSR_GEOM_INTERPOLATE_HPP
#define TSR_GEOM_INTERPOLATE_HPP

#include <memory>
#include <vector>

#include "tsr/diff/graph.hpp"
#include "tsr/geom/point_cloud.hpp"

namespace tsr {

// Inverse-distance-weighted feature propagation: for each query, the k
// nearest source points contribute with weights 1/d^p, normalized to sum to
// one. A query closer than 1e-8 to a source point snaps to that point's
// feature exactly. The delta evaluation f_nearest + sum(w_i * (f_i -
// f_nearest)) makes "all neighbors equal" return that value bit-exactly.
Tensor propagate_features(const PointCloud& source, const Tensor& queries, int k = 3,
                          double p = 2.0);

// Same weights as propagate_features, expressed as a gather plan over source
// rows; this is the building block the differentiable encoder path uses.
std::shared_ptr<GatherPlan> interpolation_plan(const Tensor& source_positions,
                                               const Tensor& queries, int k = 3,
                                               double p = 2.0);

struct GroupPoolResult {
  Tensor pooled;                 // S x d segment means, ordered by segment id
  std::vector<int> segment_ids;  // kept ids
};

// Per-segment average pooling; segments holding fewer than min_fraction of
// all points are dropped.
GroupPoolResult group_pool(const Tensor& features, const std::vector<int>& segment_labels,
                           double min_fraction = 0.01);

struct GroupPlan {
  std::shared_ptr<GatherPlan> plan;
  std::vector<int> segment_ids;
};

GroupPlan group_plan(const std::vector<int>& segment_labels, double min_fraction = 0.01);

}  // namespace tsr

#endif  // TSR_GEOM_INTERPOLATE_HPP
