#include "tsr/geom/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tsr/common.hpp"

namespace tsr {

void PointCloud::validate() const {
  if (positions.rows() < 1 || positions.cols() != 3)
    throw DataError("point cloud positions must be Nx3 with N >= 1, got " +
                    positions.shape_str());
  if (features && features->rows() != positions.rows())
    throw DataError("point cloud feature rows (" + std::to_string(features->rows()) +
                    ") do not match point count (" + std::to_string(positions.rows()) + ")");
  if (segment_labels) {
    if (static_cast<int>(segment_labels->size()) != positions.rows())
      throw DataError("segment label count does not match point count");
    for (int l : *segment_labels)
      if (l < 0 || l >= kSegmentClasses)
        throw DataError("segment label " + std::to_string(l) + " outside [0, " +
                        std::to_string(kSegmentClasses) + ")");
  }
}

namespace {

inline double sqdist(const double* p, const double* q) {
  double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
  return dx * dx + dy * dy + dz * dz;
}

// lexicographic (x, y, z) comparison for order-independent tie-breaking
inline bool lex_less(const double* p, const double* q) {
  for (int i = 0; i < 3; ++i) {
    if (p[i] < q[i]) return true;
    if (p[i] > q[i]) return false;
  }
  return false;
}

}  // namespace

std::vector<Neighbor> knn(const PointCloud& cloud, const double query[3], int k) {
  int n = cloud.size();
  if (k < 1 || k > n)
    throw DataError("knn: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  std::vector<std::pair<double, int>> order(n);
  for (int i = 0; i < n; ++i)
    order[i] = {sqdist(cloud.positions.data() + 3 * static_cast<size_t>(i), query), i};
  std::partial_sort(order.begin(), order.begin() + k, order.end());
  std::vector<Neighbor> out(k);
  for (int i = 0; i < k; ++i) out[i] = {order[i].second, std::sqrt(order[i].first)};
  return out;
}

std::vector<int> fps_indices(const Tensor& positions, int count) {
  int n = positions.rows();
  if (positions.cols() != 3) throw DataError("fps: positions must be Nx3");
  if (count < 1 || count > n)
    throw DataError("fps: count=" + std::to_string(count) + " outside [1, " +
                    std::to_string(n) + "]");
  const double* pts = positions.data();

  double centroid[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) centroid[c] += pts[3 * static_cast<size_t>(i) + c];
  for (int c = 0; c < 3; ++c) centroid[c] /= n;

  auto pick = [&](auto key) {
    int best = 0;
    for (int i = 1; i < n; ++i) {
      double ki = key(i), kb = key(best);
      if (ki > kb ||
          (ki == kb && lex_less(pts + 3 * static_cast<size_t>(i),
                                pts + 3 * static_cast<size_t>(best))))
        best = i;
    }
    return best;
  };

  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<int> selected;
  selected.reserve(count);
  int cur = pick([&](int i) { return sqdist(pts + 3 * static_cast<size_t>(i), centroid); });
  selected.push_back(cur);
  while (static_cast<int>(selected.size()) < count) {
    for (int i = 0; i < n; ++i)
      min_d2[i] = std::min(min_d2[i], sqdist(pts + 3 * static_cast<size_t>(i),
                                             pts + 3 * static_cast<size_t>(cur)));
    cur = pick([&](int i) { return min_d2[i]; });
    selected.push_back(cur);
  }
  return selected;
}

PointCloud load_point_cloud(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open point-cloud file: " + path);
  std::vector<double> coords;
  std::vector<int> labels;
  bool any_label = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x)) continue;  // blank line
    if (!(ls >> y >> z))
      throw DataError(path + ":" + std::to_string(lineno) + ": expected `x y z [segment_id]`");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
      throw DataError(path + ":" + std::to_string(lineno) + ": non-finite coordinate");
    long seg;
    bool has_label = static_cast<bool>(ls >> seg);
    std::string trailing;
    if (ls >> trailing)
      throw DataError(path + ":" + std::to_string(lineno) + ": trailing fields");
    if (!coords.empty() && has_label != any_label)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": mixed records with and without segment ids");
    coords.insert(coords.end(), {x, y, z});
    if (has_label) {
      any_label = true;
      labels.push_back(static_cast<int>(seg));
    }
  }
  if (coords.empty()) throw DataError(path + ": no points");
  int n = static_cast<int>(coords.size() / 3);
  PointCloud cloud;
  cloud.positions = Tensor(n, 3, std::move(coords));
  if (any_label) cloud.segment_labels = std::move(labels);
  cloud.validate();
  return cloud;
}

void save_point_cloud(const std::string& path, const PointCloud& cloud) {
  cloud.validate();
  std::ofstream os(path);
  if (!os) throw DataError("cannot open point-cloud file for writing: " + path);
  os.precision(17);
  for (int i = 0; i < cloud.size(); ++i) {
    os << cloud.positions.at(i, 0) << ' ' << cloud.positions.at(i, 1) << ' '
       << cloud.positions.at(i, 2);
    if (cloud.segment_labels) os << ' ' << (*cloud.segment_labels)[i];
    os << '\n';
  }
  if (!os) throw DataError("failed writing point-cloud file: " + path);
}

}  // namespace tsr
