#include "tsr/cli/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <string>

#include "tsr/common.hpp"
#include "tsr/enc/vocab.hpp"
#include "tsr/geom/point_cloud.hpp"

namespace tsr {

namespace {

// Segment ids shared across archetypes: a chair's back never appears on a
// table or shelf, which keeps part sets archetype-specific.
constexpr int kSegTop = 0;   // table top / chair seat
constexpr int kSegLeg = 1;
constexpr int kSegBack = 2;
constexpr int kSegBoard = 3;
constexpr int kSegSide = 4;

struct Box {
  double cx, cy, cz;  // center
  double hx, hy, hz;  // half extents
  int seg;
  double area() const { return 8.0 * (hy * hz + hx * hz + hx * hy); }
};

struct Assembly {
  std::vector<Box> boxes;
  std::vector<std::string> captions;  // templates already instantiated
};

std::string count_word(int n) {
  switch (n) {
    case 2: return "two";
    case 3: return "three";
    case 4: return "four";
    default: return std::to_string(n);
  }
}

Assembly make_table(Rng& rng) {
  const double h = rng.uniform(0.6, 1.5);
  const double tw = rng.uniform(0.35, 0.65);
  const double td = rng.uniform(0.35, 0.65);
  const int legs = rng.uniform_int(3, 4);
  const bool thick = rng.uniform() < 0.5;
  const double lt = thick ? rng.uniform(0.045, 0.065) : rng.uniform(0.015, 0.025);
  const double tt = 0.025;

  Assembly a;
  a.boxes.push_back({0.0, 0.0, h - tt, tw, td, tt, kSegTop});
  const double lh = (h - 2.0 * tt) / 2.0;
  const double ix = tw - lt - 0.03, iy = td - lt - 0.03;
  if (legs == 4) {
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0}) a.boxes.push_back({sx * ix, sy * iy, lh, lt, lt, lh, kSegLeg});
  } else {
    a.boxes.push_back({-ix, -iy, lh, lt, lt, lh, kSegLeg});
    a.boxes.push_back({-ix, iy, lh, lt, lt, lh, kSegLeg});
    a.boxes.push_back({ix, 0.0, lh, lt, lt, lh, kSegLeg});
  }

  const std::string aspect = h < 1.0 ? "short" : "tall";
  const std::string size = tw < 0.5 ? "narrow" : "wide";
  const std::string nlegs = count_word(legs);
  const std::string girth = thick ? "thick" : "thin";
  a.captions = {
      "a " + aspect + " table with " + nlegs + " " + girth + " legs",
      "a " + size + " table standing on " + nlegs + " legs",
      "this " + aspect + " " + size + " table has " + nlegs + " " + girth + " legs",
      "a table with a " + size + " top and " + nlegs + " legs",
      nlegs + " " + girth + " legs hold up this " + aspect + " table",
  };
  return a;
}

Assembly make_chair(Rng& rng) {
  const double sh = rng.uniform(0.35, 0.55);
  const double sw = rng.uniform(0.18, 0.26);
  const double sd = rng.uniform(0.18, 0.26);
  const int legs = rng.uniform_int(3, 4);
  const bool thick = rng.uniform() < 0.5;
  const double lt = thick ? rng.uniform(0.035, 0.05) : rng.uniform(0.012, 0.02);
  const bool high = rng.uniform() < 0.5;
  const double bh = high ? rng.uniform(0.45, 0.65) : rng.uniform(0.2, 0.32);
  const double st = 0.02;

  Assembly a;
  a.boxes.push_back({0.0, 0.0, sh - st, sw, sd, st, kSegTop});
  const double lh = (sh - 2.0 * st) / 2.0;
  const double ix = sw - lt - 0.02, iy = sd - lt - 0.02;
  if (legs == 4) {
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0}) a.boxes.push_back({sx * ix, sy * iy, lh, lt, lt, lh, kSegLeg});
  } else {
    a.boxes.push_back({-ix, -iy, lh, lt, lt, lh, kSegLeg});
    a.boxes.push_back({-ix, iy, lh, lt, lt, lh, kSegLeg});
    a.boxes.push_back({ix, 0.0, lh, lt, lt, lh, kSegLeg});
  }
  a.boxes.push_back({0.0, -(sd - st), sh + bh / 2.0, sw, st, bh / 2.0, kSegBack});

  const std::string aspect = sh + bh < 0.8 ? "short" : "tall";
  const std::string back = high ? "high" : "low";
  const std::string nlegs = count_word(legs);
  const std::string girth = thick ? "thick" : "thin";
  a.captions = {
      "a " + aspect + " chair with a " + back + " back and " + nlegs + " legs",
      "a chair with " + nlegs + " " + girth + " legs and a " + back + " backrest",
      "this " + aspect + " chair has a " + back + " back",
      "a " + back + " backed chair standing on " + nlegs + " " + girth + " legs",
      "the " + aspect + " chair rests on " + nlegs + " legs",
  };
  return a;
}

Assembly make_shelf(Rng& rng) {
  const double h = rng.uniform(0.8, 1.8);
  const double w = rng.uniform(0.3, 0.6);
  const double d = rng.uniform(0.12, 0.2);
  const int boards = rng.uniform_int(2, 4);
  const bool thick = rng.uniform() < 0.5;
  const double bt = thick ? rng.uniform(0.024, 0.036) : rng.uniform(0.01, 0.016);
  const double st = 0.02;

  Assembly a;
  for (int k = 0; k < boards; ++k) {
    const double z = h * (k + 0.5) / boards;
    a.boxes.push_back({0.0, 0.0, z, w - st, d, bt, kSegBoard});
  }
  for (double sx : {-1.0, 1.0}) a.boxes.push_back({sx * (w - st / 2.0), 0.0, h / 2.0, st, d, h / 2.0, kSegSide});

  const std::string aspect = h / (2.0 * w) > 1.6 ? "tall" : "wide";
  const std::string nb = count_word(boards);
  const std::string girth = thick ? "thick" : "thin";
  a.captions = {
      "a " + aspect + " shelf with " + nb + " " + girth + " boards",
      "a shelf unit holding " + nb + " boards between two sides",
      "this " + aspect + " shelf stacks " + nb + " " + girth + " boards",
      "a " + aspect + " bookshelf with " + nb + " levels",
      nb + " boards make up this " + aspect + " shelf",
  };
  return a;
}

// Area-weighted surface sampling with exact total count (largest remainder).
PointCloud sample_assembly(const Assembly& a, int n, Rng& rng) {
  std::vector<double> area(a.boxes.size());
  double total = 0.0;
  for (size_t b = 0; b < a.boxes.size(); ++b) total += area[b] = a.boxes[b].area();

  std::vector<int> count(a.boxes.size());
  std::vector<std::pair<double, size_t>> frac;
  int assigned = 0;
  for (size_t b = 0; b < a.boxes.size(); ++b) {
    const double exact = n * area[b] / total;
    count[b] = static_cast<int>(exact);
    assigned += count[b];
    frac.emplace_back(exact - count[b], b);
  }
  std::sort(frac.begin(), frac.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  for (int extra = 0; extra < n - assigned; ++extra) ++count[frac[static_cast<size_t>(extra)].second];

  Tensor pos(n, 3);
  std::vector<int> labels(static_cast<size_t>(n));
  int row = 0;
  for (size_t b = 0; b < a.boxes.size(); ++b) {
    const Box& box = a.boxes[b];
    // cumulative face areas: +x -x +y -y +z -z
    const double fa[6] = {4 * box.hy * box.hz, 4 * box.hy * box.hz, 4 * box.hx * box.hz,
                          4 * box.hx * box.hz, 4 * box.hx * box.hy, 4 * box.hx * box.hy};
    double cum[6], run = 0.0;
    for (int f = 0; f < 6; ++f) cum[f] = run += fa[f];
    for (int p = 0; p < count[b]; ++p) {
      const double pick = rng.uniform() * run;
      int f = 0;
      while (f < 5 && pick >= cum[f]) ++f;
      const double u = rng.uniform(-1.0, 1.0), v = rng.uniform(-1.0, 1.0);
      double x, y, z;
      switch (f) {
        case 0: x = box.hx; y = u * box.hy; z = v * box.hz; break;
        case 1: x = -box.hx; y = u * box.hy; z = v * box.hz; break;
        case 2: y = box.hy; x = u * box.hx; z = v * box.hz; break;
        case 3: y = -box.hy; x = u * box.hx; z = v * box.hz; break;
        case 4: z = box.hz; x = u * box.hx; y = v * box.hy; break;
        default: z = -box.hz; x = u * box.hx; y = v * box.hy; break;
      }
      pos.at(row, 0) = box.cx + x;
      pos.at(row, 1) = box.cy + y;
      pos.at(row, 2) = box.cz + z;
      labels[static_cast<size_t>(row)] = box.seg;
      ++row;
    }
  }
  return {std::move(pos), std::nullopt, std::move(labels)};
}

}  // namespace

SyntheticSummary gen_synthetic(const SyntheticOptions& opt) {
  if (opt.shape_count < 2) throw ConfigError("synthetic generation needs at least 2 shapes");
  if (opt.captions_per_shape < 1) throw ConfigError("captions-per-shape must be positive");
  if (opt.point_count < 16) throw ConfigError("point count must be at least 16");
  if (opt.out_dir.empty()) throw UsageError("output directory is required");

  namespace fs = std::filesystem;
  fs::create_directories(fs::path(opt.out_dir) / "shapes");

  SyntheticSummary summary;
  std::vector<CaptionRecord> records;
  for (int i = 0; i < opt.shape_count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "shape_%04d", i);
    const std::string id(name);

    Rng rng(Rng::derive(opt.seed, id));
    Assembly a;
    switch (i % 3) {
      case 0: a = make_table(rng); break;
      case 1: a = make_chair(rng); break;
      default: a = make_shelf(rng); break;
    }
    PointCloud cloud = sample_assembly(a, opt.point_count, rng);
    save_point_cloud((fs::path(opt.out_dir) / "shapes" / (id + ".xyz")).string(), cloud);

    for (int c = 0; c < opt.captions_per_shape; ++c)
      records.push_back({id, a.captions[static_cast<size_t>(c) % a.captions.size()]});
    summary.shape_ids.push_back(id);
  }
  save_caption_file((fs::path(opt.out_dir) / "captions.tsv").string(), records);
  summary.caption_count = static_cast<int>(records.size());
  return summary;
}

}  // namespace tsr
