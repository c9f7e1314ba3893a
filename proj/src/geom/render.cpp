#include "tsr/geom/render.hpp"

#include <cmath>
#include <numbers>

#include "tsr/common.hpp"

namespace tsr {
namespace {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline Vec3 normalized(const Vec3& a) {
  double n = std::sqrt(dot(a, a));
  return {a[0] / n, a[1] / n, a[2] / n};
}

}  // namespace

void CameraPose::validate() const {
  auto unit = [](const Vec3& v) { return std::abs(std::sqrt(dot(v, v)) - 1.0) < 1e-9; };
  if (!unit(forward) || !unit(up) || !unit(right))
    throw DataError("camera pose: basis vector is not unit length");
  if (std::abs(dot(forward, up)) > 1e-9 || std::abs(dot(forward, right)) > 1e-9 ||
      std::abs(dot(up, right)) > 1e-9)
    throw DataError("camera pose: basis is not orthogonal");
}

void MultiViewSet::validate() const {
  if (images.empty() || images.size() != poses.size() || images.size() != rays.size())
    throw DataError("multi-view set: inconsistent view counts");
  for (size_t v = 0; v < images.size(); ++v) {
    if (images[v].rows() != height || images[v].cols() != width)
      throw DataError("multi-view set: image extent mismatch");
    if (rays[v].rows() != height * width || rays[v].cols() != 3)
      throw DataError("multi-view set: ray extent mismatch");
    poses[v].validate();
    for (int i = 0; i < rays[v].rows(); ++i) {
      const double* r = rays[v].data() + 3 * static_cast<size_t>(i);
      double n = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
      if (std::abs(n - 1.0) > 1e-9) throw DataError("multi-view set: ray is not unit length");
    }
    for (size_t i = 0; i < images[v].size(); ++i)
      if (images[v][i] < 0.0 || images[v][i] > 1.0)
        throw DataError("multi-view set: intensity outside [0, 1]");
  }
}

MultiViewSet render_views(const PointCloud& cloud, int views, int height, int width) {
  cloud.validate();
  if (views < 1) throw ConfigError("render_views: need at least one view");
  if (height < 1 || width < 1) throw ConfigError("render_views: empty image");

  int n = cloud.size();
  const double* pts = cloud.positions.data();
  Vec3 lo = {pts[0], pts[1], pts[2]}, hi = lo;
  for (int i = 1; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::min(lo[c], pts[3 * static_cast<size_t>(i) + c]);
      hi[c] = std::max(hi[c], pts[3 * static_cast<size_t>(i) + c]);
    }
  Vec3 center = {(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2};
  double radius = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* p = pts + 3 * static_cast<size_t>(i);
    Vec3 d = {p[0] - center[0], p[1] - center[1], p[2] - center[2]};
    radius = std::max(radius, std::sqrt(dot(d, d)));
  }
  if (radius < 1e-12) radius = 1.0;  // degenerate cloud: single centered splat

  constexpr double kElevation = 30.0 * std::numbers::pi / 180.0;
  const double camera_distance = 2.0 * radius;
  const double extent = 1.1 * radius;  // half-width of the imaged square

  MultiViewSet out;
  out.height = height;
  out.width = width;
  for (int v = 0; v < views; ++v) {
    double azimuth = 2.0 * std::numbers::pi * v / views;
    Vec3 dir = {std::cos(kElevation) * std::cos(azimuth), std::sin(kElevation),
                std::cos(kElevation) * std::sin(azimuth)};
    CameraPose pose;
    pose.forward = {-dir[0], -dir[1], -dir[2]};
    pose.right = normalized(cross(pose.forward, Vec3{0.0, 1.0, 0.0}));
    pose.up = normalized(cross(pose.right, pose.forward));
    pose.origin = {center[0] + camera_distance * dir[0], center[1] + camera_distance * dir[1],
                   center[2] + camera_distance * dir[2]};

    Tensor image(height, width, 0.0);
    Tensor depth(height, width, 0.0);  // stores best (smallest) depth, 0 = empty
    for (int i = 0; i < n; ++i) {
      const double* p = pts + 3 * static_cast<size_t>(i);
      Vec3 q = {p[0] - center[0], p[1] - center[1], p[2] - center[2]};
      double u = dot(q, pose.right);
      double w = dot(q, pose.up);
      double z = dot(q, pose.forward) + camera_distance;  // in [radius, 3*radius]
      int px = static_cast<int>(std::floor((u + extent) / (2.0 * extent) * width));
      int py = static_cast<int>(std::floor((extent - w) / (2.0 * extent) * height));
      if (px < 0 || px >= width || py < 0 || py >= height) continue;
      if (depth.at(py, px) != 0.0 && depth.at(py, px) <= z) continue;
      depth.at(py, px) = z;
      image.at(py, px) = 1.0 - (z - radius) / (2.0 * radius);
    }

    Tensor rays(height * width, 3, 0.0);
    for (int i = 0; i < height * width; ++i)
      for (int c = 0; c < 3; ++c) rays.at(i, c) = pose.forward[c];

    out.images.push_back(std::move(image));
    out.poses.push_back(pose);
    out.rays.push_back(std::move(rays));
  }
  return out;
}

}  // namespace tsr
