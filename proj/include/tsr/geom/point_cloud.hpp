#ifndef TSR_GEOM_POINT_CLOUD_HPP
#define TSR_GEOM_POINT_CLOUD_HPP

#include <optional>
#include <string>
#include <vector>

#include "tsr/diff/tensor.hpp"

namespace tsr {

constexpr int kSegmentClasses = 17;

struct PointCloud {
  Tensor positions;                                // N x 3
  std::optional<Tensor> features;                  // N x d
  std::optional<std::vector<int>> segment_labels;  // N values in [0, kSegmentClasses)

  int size() const { return positions.rows(); }
  void validate() const;
};

struct Neighbor {
  int index;
  double distance;
};

// Exact Euclidean k-nearest neighbors, ascending by distance, ties broken by
// lower index.
std::vector<Neighbor> knn(const PointCloud& cloud, const double query[3], int k);

// Farthest-point sampling: starts at the point farthest from the centroid and
// greedily adds the point farthest from the selected set. Ties are broken by
// lexicographic comparison of coordinates, so the selected positions do not
// depend on input ordering. Returns indices in selection order.
std::vector<int> fps_indices(const Tensor& positions, int count);

// File format: one `x y z [segment_id]` record per line.
PointCloud load_point_cloud(const std::string& path);
void save_point_cloud(const std::string& path, const PointCloud& cloud);

}  // namespace tsr

#endif  // TSR_GEOM_POINT_CLOUD_HPP
