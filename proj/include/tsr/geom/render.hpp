#ifndef TSR_GEOM_RENDER_HPP
#define TSR_GEOM_RENDER_HPP

#include <array>
#include <vector>

#include "tsr/geom/point_cloud.hpp"

namespace tsr {

struct CameraPose {
  std::array<double, 3> origin{};
  std::array<double, 3> forward{};
  std::array<double, 3> up{};
  std::array<double, 3> right{};
  void validate() const;  // orthonormal basis within 1e-9
};

struct MultiViewSet {
  int height = 0, width = 0;
  std::vector<Tensor> images;     // V tensors, H x W, intensities in [0, 1]
  std::vector<CameraPose> poses;  // V entries
  std::vector<Tensor> rays;       // V tensors, (H*W) x 3 unit directions
  int view_count() const { return static_cast<int>(images.size()); }
  void validate() const;
};

// Deterministic software renderer: V orthographic cameras on a ring around
// the bounding-sphere center (equal azimuth steps, elevation 30 degrees),
// 1-pixel point splats shaded by 1 - normalized depth, closest point wins.
// Rays are the per-pixel viewing directions (constant per view).
MultiViewSet render_views(const PointCloud& cloud, int views, int height, int width);

}  // namespace tsr

#endif  // TSR_GEOM_RENDER_HPP
