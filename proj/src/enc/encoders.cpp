#include "tsr/enc/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "tsr/common.hpp"
#include "tsr/geom/interpolate.hpp"

namespace tsr {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

// Mean offset of the k nearest cloud points around each selected center;
// descriptor row = [center xyz | mean offset xyz].
Tensor stage_descriptor(const PointCloud& cloud, const std::vector<int>& centers, int k,
                        std::vector<std::vector<int>>* neighbors_out) {
  Tensor desc(static_cast<int>(centers.size()), 6);
  for (size_t i = 0; i < centers.size(); ++i) {
    double q[3] = {cloud.positions.at(centers[i], 0), cloud.positions.at(centers[i], 1),
                   cloud.positions.at(centers[i], 2)};
    auto nb = knn(cloud, q, k);
    double mean[3] = {0.0, 0.0, 0.0};
    std::vector<int> idx;
    idx.reserve(nb.size());
    for (const auto& n : nb) {
      for (int a = 0; a < 3; ++a) mean[a] += cloud.positions.at(n.index, a) - q[a];
      idx.push_back(n.index);
    }
    for (int a = 0; a < 3; ++a) {
      desc.at(static_cast<int>(i), a) = q[a];
      desc.at(static_cast<int>(i), 3 + a) = mean[a] / static_cast<double>(nb.size());
    }
    if (neighbors_out) neighbors_out->push_back(std::move(idx));
  }
  return desc;
}

Tensor gather_rows(const Tensor& src, const std::vector<int>& rows) {
  Tensor out(static_cast<int>(rows.size()), src.cols());
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < src.cols(); ++j) out.at(static_cast<int>(i), j) = src.at(rows[i], j);
  return out;
}

}  // namespace

void EncoderConfig::validate() const {
  require(embed_dim >= 1, "embed_dim must be positive");
  require(heads >= 1, "heads must be positive");
  require(embed_dim % heads == 0, "embed_dim " + std::to_string(embed_dim) +
                                      " is not divisible by heads " + std::to_string(heads));
  require(vocab_size >= 2, "vocab_size must cover the two reserved ids");
  require(max_len >= 1, "max_len must be positive");
  require(stage1_centers >= 1 && stage2_centers >= 1, "set-abstraction sizes must be positive");
  require(stage2_centers <= stage1_centers, "stage2_centers cannot exceed stage1_centers");
  require(local_k >= 1, "local_k must be positive");
  require(interp_k >= 1, "interp_k must be positive");
  require(interp_power > 0.0, "interp_power must be positive");
  require(min_group_fraction >= 0.0 && min_group_fraction < 1.0,
          "min_group_fraction must lie in [0, 1)");
  require(view_count >= 1, "view_count must be positive");
  require(image_height >= 1 && image_width >= 1, "image extents must be positive");
  require(num_octaves >= 1, "num_octaves must be positive");
  require(conv_base >= 1, "conv_base must be positive");
  require(patch_size >= 1, "patch_size must be positive");
  require(depth >= 1, "depth must be positive");
  require(ff_ratio >= 1, "ff_ratio must be positive");
  if (conv_out_height() % patch_size != 0 || conv_out_width() % patch_size != 0)
    throw ConfigError("patch size " + std::to_string(patch_size) +
                      " does not divide the post-conv extent " +
                      std::to_string(conv_out_height()) + "x" + std::to_string(conv_out_width()));
}

void TokenSequence::validate(int max_len) const {
  if (ids.empty()) throw DataError("token sequence is empty");
  if (static_cast<int>(ids.size()) > max_len)
    throw DataError("token sequence length " + std::to_string(ids.size()) + " exceeds max_len " +
                    std::to_string(max_len));
  if (vocab_size < 2) throw DataError("token sequence is missing its vocabulary reference");
  for (int id : ids)
    if (id < 0 || id >= vocab_size)
      throw DataError("token id " + std::to_string(id) + " outside closed vocabulary of size " +
                      std::to_string(vocab_size));
}

Tensor ray_encode(const Tensor& rays, int start_octave, int num_octaves) {
  if (rays.cols() != 3)
    throw ShapeError("rays must be R x 3, got " + rays.shape_str());
  if (num_octaves < 1) throw ConfigError("num_octaves must be positive");
  Tensor out(rays.rows(), 6 * num_octaves);
  for (int r = 0; r < rays.rows(); ++r)
    for (int c = 0; c < 3; ++c) {
      double u = rays.at(r, c);
      for (int o = 0; o < num_octaves; ++o) {
        double arg = std::ldexp(1.0, start_octave + o) * kPi * u;
        out.at(r, c * 2 * num_octaves + 2 * o) = std::sin(arg);
        out.at(r, c * 2 * num_octaves + 2 * o + 1) = std::cos(arg);
      }
    }
  return out;
}

void init_encoder_params(ParameterStore& store, const EncoderConfig& cfg) {
  cfg.validate();
  const int D = cfg.embed_dim;

  store.create_uniform("shape.stage1.w", 6, D, 6);
  store.create_zeros("shape.stage1.b", 1, D);
  store.create_uniform("shape.stage2.w", 6 + D, D, 6 + D);
  store.create_zeros("shape.stage2.b", 1, D);

  store.create_uniform("text.embed", cfg.vocab_size, D, D);
  for (const char* dir : {"text.f", "text.r"}) {
    std::string p(dir);
    for (const char* gate : {".wr", ".wz", ".wn", ".ur", ".uz", ".un"})
      store.create_uniform(p + gate, D, D, D);
    for (const char* bias : {".br", ".bz", ".bn"}) store.create_zeros(p + bias, 1, D);
  }
  store.create_uniform("text.proj.w", D, D, D);
  store.create_zeros("text.proj.b", 1, D);

  const int cin = cfg.view_channels();
  store.create_uniform("views.conv1.w", 9 * cin, cfg.conv_base, 9 * cin);
  store.create_zeros("views.conv1.b", 1, cfg.conv_base);
  store.create_uniform("views.conv2.w", 9 * cfg.conv_base, 2 * cfg.conv_base, 9 * cfg.conv_base);
  store.create_zeros("views.conv2.b", 1, 2 * cfg.conv_base);
  const int patch_dim = cfg.patch_size * cfg.patch_size * 2 * cfg.conv_base;
  store.create_uniform("views.patch.w", patch_dim, D, patch_dim);
  store.create_zeros("views.patch.b", 1, D);
  store.create_uniform("views.pos", cfg.patches_per_view(), D, D);
  store.create_uniform("views.cam.w", 6, D, 6);
  store.create_zeros("views.cam.b", 1, D);
  for (int l = 0; l < cfg.depth; ++l) {
    std::string p = "views.blk" + std::to_string(l);
    store.create_const(p + ".ln1.g", 1, D, 1.0);
    store.create_zeros(p + ".ln1.b", 1, D);
    for (const char* w : {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo"})
      store.create_uniform(p + w, D, D, D);
    for (const char* b : {".attn.bq", ".attn.bk", ".attn.bv", ".attn.bo"})
      store.create_zeros(p + b, 1, D);
    store.create_const(p + ".ln2.g", 1, D, 1.0);
    store.create_zeros(p + ".ln2.b", 1, D);
    store.create_uniform(p + ".ff.w1", D, cfg.ff_ratio * D, D);
    store.create_zeros(p + ".ff.b1", 1, cfg.ff_ratio * D);
    store.create_uniform(p + ".ff.w2", cfg.ff_ratio * D, D, cfg.ff_ratio * D);
    store.create_zeros(p + ".ff.b2", 1, D);
  }
  store.create_const("views.final.g", 1, D, 1.0);
  store.create_zeros("views.final.b", 1, D);

  store.create_uniform("fuse.w", 2 * D, D, 2 * D);
  store.create_zeros("fuse.b", 1, D);
}

ShapeInputs prepare_shape_inputs(const PointCloud& cloud, const EncoderConfig& cfg) {
  cfg.validate();
  cloud.validate();
  const int n = cloud.positions.rows();
  ShapeInputs in;

  // Stage 1: centers over the raw points. The descriptors depend only on
  // positions, so they enter as constants; gradients reach the stage weights.
  const int n1 = std::min(cfg.stage1_centers, n);
  auto idx1 = fps_indices(cloud.positions, n1);
  in.desc1 = stage_descriptor(cloud, idx1, std::min(cfg.local_k, n), nullptr);

  // Stage 2: centers over stage-1 centers; the neighborhood feature mean is a
  // gather over stage-1 features so those weights stay on the gradient path.
  Tensor c1pos = gather_rows(cloud.positions, idx1);
  PointCloud stage1_cloud{c1pos, std::nullopt, std::nullopt};
  const int n2 = std::min(cfg.stage2_centers, n1);
  auto idx2 = fps_indices(c1pos, n2);
  std::vector<std::vector<int>> nb2;
  in.desc2 = stage_descriptor(stage1_cloud, idx2, std::min(cfg.local_k, n1), &nb2);

  in.gather2 = std::make_shared<GatherPlan>();
  in.gather2->offsets.push_back(0);
  for (const auto& nb : nb2) {
    const double w = 1.0 / static_cast<double>(nb.size());
    for (int i : nb) {
      in.gather2->indices.push_back(i);
      in.gather2->weights.push_back(w);
    }
    in.gather2->offsets.push_back(static_cast<int>(in.gather2->indices.size()));
  }

  // Propagate center features back to every point, then pool by segment.
  Tensor c2pos = gather_rows(c1pos, idx2);
  in.back = interpolation_plan(c2pos, cloud.positions, std::min(cfg.interp_k, n2),
                               cfg.interp_power);
  if (cloud.segment_labels) {
    auto gp = group_plan(*cloud.segment_labels, cfg.min_group_fraction);
    in.pool = std::move(gp.plan);
    in.part_ids = std::move(gp.segment_ids);
  } else {
    in.pool = std::make_shared<GatherPlan>();
    in.pool->offsets = {0, n};
    for (int i = 0; i < n; ++i) {
      in.pool->indices.push_back(i);
      in.pool->weights.push_back(1.0 / static_cast<double>(n));
    }
    in.part_ids = {0};
  }
  return in;
}

ShapeGraphResult build_shape_encoder(Graph& g, const ShapeInputs& inputs,
                                     const EncoderConfig& cfg) {
  cfg.validate();
  auto f1 = g.relu(g.add(g.matmul(g.constant(inputs.desc1), g.param("shape.stage1.w")),
                         g.param("shape.stage1.b")));
  auto cat = g.concat({g.constant(inputs.desc2), g.row_gather(f1, inputs.gather2)}, 1);
  auto f2 = g.relu(g.add(g.matmul(cat, g.param("shape.stage2.w")), g.param("shape.stage2.b")));
  auto points = g.row_gather(f2, inputs.back);
  return {g.row_gather(points, inputs.pool), inputs.part_ids};
}

ShapeGraphResult build_shape_encoder(Graph& g, const PointCloud& cloud, const EncoderConfig& cfg) {
  return build_shape_encoder(g, prepare_shape_inputs(cloud, cfg), cfg);
}

Graph::NodeId build_text_encoder(Graph& g, const TokenSequence& tokens, const EncoderConfig& cfg) {
  cfg.validate();
  tokens.validate(cfg.max_len);
  if (tokens.vocab_size != cfg.vocab_size)
    throw ConfigError("token sequence vocabulary size " + std::to_string(tokens.vocab_size) +
                      " does not match configured vocab_size " + std::to_string(cfg.vocab_size));
  const int m = static_cast<int>(tokens.ids.size());
  auto emb = g.row_gather(g.param("text.embed"), tokens.ids);

  auto step = [&g](Graph::NodeId x, Graph::NodeId h, const std::string& p) {
    auto gate = [&](const char* w, const char* u, const char* b) {
      return g.add(g.add(g.matmul(x, g.param(p + w)), g.matmul(h, g.param(p + u))),
                   g.param(p + b));
    };
    auto r = g.sigmoid(gate(".wr", ".ur", ".br"));
    auto z = g.sigmoid(gate(".wz", ".uz", ".bz"));
    auto cand = g.tanh(g.add(
        g.add(g.matmul(x, g.param(p + ".wn")), g.mul(r, g.matmul(h, g.param(p + ".un")))),
        g.param(p + ".bn")));
    // h' = (1 - z) * cand + z * h
    return g.add(g.mul(g.affine(z, -1.0, 1.0), cand), g.mul(z, h));
  };

  std::vector<Graph::NodeId> xs(m);
  for (int t = 0; t < m; ++t) xs[t] = g.slice(emb, 0, t, 1);

  auto h0 = g.constant(Tensor(1, cfg.embed_dim, 0.0));
  std::vector<Graph::NodeId> hf(m), hr(m);
  auto h = h0;
  for (int t = 0; t < m; ++t) hf[t] = h = step(xs[t], h, "text.f");
  h = h0;
  for (int t = m - 1; t >= 0; --t) hr[t] = h = step(xs[t], h, "text.r");

  std::vector<Graph::NodeId> ws(m);
  for (int t = 0; t < m; ++t) ws[t] = g.affine(g.add(hf[t], hr[t]), 0.5);
  auto w = m == 1 ? ws[0] : g.concat(ws, 0);
  return g.add(g.matmul(w, g.param("text.proj.w")), g.param("text.proj.b"));
}

ViewInputs prepare_view_inputs(const MultiViewSet& views, const EncoderConfig& cfg) {
  cfg.validate();
  views.validate();
  if (views.view_count() != cfg.view_count)
    throw ConfigError("view count " + std::to_string(views.view_count()) +
                      " does not match configured view_count " + std::to_string(cfg.view_count));
  if (views.height != cfg.image_height || views.width != cfg.image_width)
    throw ConfigError("image extent " + std::to_string(views.height) + "x" +
                      std::to_string(views.width) + " does not match configured " +
                      std::to_string(cfg.image_height) + "x" + std::to_string(cfg.image_width));

  const int hw = views.height * views.width;
  ViewInputs out;
  for (int v = 0; v < views.view_count(); ++v) {
    Tensor rayf = ray_encode(views.rays[v], cfg.start_octave, cfg.num_octaves);
    Tensor in(hw, cfg.view_channels());
    for (int p = 0; p < hw; ++p) {
      in.at(p, 0) = views.images[v][static_cast<size_t>(p)];
      for (int c = 0; c < rayf.cols(); ++c) in.at(p, c + 1) = rayf.at(p, c);
    }
    out.pixels.push_back(std::move(in));
    Tensor cam(1, 6);
    for (int a = 0; a < 3; ++a) {
      cam.at(0, a) = views.poses[v].origin[a];
      cam.at(0, 3 + a) = views.poses[v].forward[a];
    }
    out.cameras.push_back(std::move(cam));
  }
  return out;
}

ViewGraphResult build_view_encoder(Graph& g, const ViewInputs& inputs, const EncoderConfig& cfg) {
  cfg.validate();
  if (inputs.pixels.size() != static_cast<size_t>(cfg.view_count) ||
      inputs.cameras.size() != inputs.pixels.size())
    throw ConfigError("view inputs hold " + std::to_string(inputs.pixels.size()) +
                      " views, configured view_count is " + std::to_string(cfg.view_count));
  const int hw = cfg.image_height * cfg.image_width;
  for (const auto& px : inputs.pixels)
    if (px.rows() != hw || px.cols() != cfg.view_channels())
      throw ShapeError("view pixel block must be " + std::to_string(hw) + "x" +
                       std::to_string(cfg.view_channels()) + ", got " + px.shape_str());

  const int D = cfg.embed_dim;
  Conv2dSpec s1{cfg.image_height, cfg.image_width, cfg.view_channels(), cfg.conv_base, 3, 2, 1};
  Conv2dSpec s2{s1.out_height(), s1.out_width(), cfg.conv_base, 2 * cfg.conv_base, 3, 2, 1};
  const int w2 = s2.out_width();
  const int pside = cfg.patch_size;

  std::vector<Graph::NodeId> view_tokens;
  for (int v = 0; v < cfg.view_count; ++v) {
    auto x = g.constant(inputs.pixels[v]);
    auto c1 = g.relu(
        g.add(g.conv2d(x, g.param("views.conv1.w"), s1), g.param("views.conv1.b")));
    auto c2 = g.relu(
        g.add(g.conv2d(c1, g.param("views.conv2.w"), s2), g.param("views.conv2.b")));

    std::vector<Graph::NodeId> patch_rows;
    for (int py = 0; py < s2.out_height() / pside; ++py)
      for (int px = 0; px < w2 / pside; ++px) {
        std::vector<int> rows;
        rows.reserve(static_cast<size_t>(pside) * pside);
        for (int dy = 0; dy < pside; ++dy)
          for (int dx = 0; dx < pside; ++dx)
            rows.push_back((py * pside + dy) * w2 + (px * pside + dx));
        patch_rows.push_back(
            g.reshape(g.row_gather(c2, rows), 1, pside * pside * s2.out_channels));
      }
    auto patches = patch_rows.size() == 1 ? patch_rows[0] : g.concat(patch_rows, 0);
    auto tok = g.add(g.matmul(patches, g.param("views.patch.w")), g.param("views.patch.b"));
    tok = g.add(tok, g.param("views.pos"));

    auto cam_emb = g.add(g.matmul(g.constant(inputs.cameras[v]), g.param("views.cam.w")),
                         g.param("views.cam.b"));
    view_tokens.push_back(g.add(tok, cam_emb));
  }

  ViewGraphResult out;
  out.pre_tokens = view_tokens.size() == 1 ? view_tokens[0] : g.concat(view_tokens, 0);

  const int hd = D / cfg.heads;
  auto x = out.pre_tokens;
  for (int l = 0; l < cfg.depth; ++l) {
    std::string p = "views.blk" + std::to_string(l);
    auto ln = [&](Graph::NodeId t, const std::string& name) {
      return g.add(g.mul(g.layer_norm_rows(t), g.param(p + name + ".g")),
                   g.param(p + name + ".b"));
    };
    auto n1 = ln(x, ".ln1");
    auto qn = g.add(g.matmul(n1, g.param(p + ".attn.wq")), g.param(p + ".attn.bq"));
    auto kn = g.add(g.matmul(n1, g.param(p + ".attn.wk")), g.param(p + ".attn.bk"));
    auto vn = g.add(g.matmul(n1, g.param(p + ".attn.wv")), g.param(p + ".attn.bv"));
    std::vector<Graph::NodeId> head_out;
    for (int hh = 0; hh < cfg.heads; ++hh) {
      auto qh = g.slice(qn, 1, hh * hd, hd);
      auto kh = g.slice(kn, 1, hh * hd, hd);
      auto vh = g.slice(vn, 1, hh * hd, hd);
      auto at = g.softmax_rows(
          g.affine(g.matmul(qh, kh, false, true), 1.0 / std::sqrt(static_cast<double>(hd))));
      head_out.push_back(g.matmul(at, vh));
    }
    auto cat = head_out.size() == 1 ? head_out[0] : g.concat(head_out, 1);
    x = g.add(x, g.add(g.matmul(cat, g.param(p + ".attn.wo")), g.param(p + ".attn.bo")));
    auto n2 = ln(x, ".ln2");
    auto hidden = g.relu(g.add(g.matmul(n2, g.param(p + ".ff.w1")), g.param(p + ".ff.b1")));
    x = g.add(x, g.add(g.matmul(hidden, g.param(p + ".ff.w2")), g.param(p + ".ff.b2")));
  }
  out.tokens =
      g.add(g.mul(g.layer_norm_rows(x), g.param("views.final.g")), g.param("views.final.b"));
  return out;
}

ViewGraphResult build_view_encoder(Graph& g, const MultiViewSet& views, const EncoderConfig& cfg) {
  return build_view_encoder(g, prepare_view_inputs(views, cfg), cfg);
}

Graph::NodeId build_fusion(Graph& g, Graph::NodeId part_features, Graph::NodeId scene_tokens,
                           const EncoderConfig& cfg) {
  cfg.validate();
  auto ps = g.node_shape(part_features);
  auto ss = g.node_shape(scene_tokens);
  if (ps[1] != cfg.embed_dim || ss[1] != cfg.embed_dim)
    throw ShapeError("fusion expects width " + std::to_string(cfg.embed_dim) + ", got parts " +
                     std::to_string(ps[1]) + " and scene " + std::to_string(ss[1]));
  auto pooled = g.mean(scene_tokens, 0);
  auto rep = g.row_gather(pooled, std::vector<int>(static_cast<size_t>(ps[0]), 0));
  auto cat = g.concat({part_features, rep}, 1);
  return g.relu(g.add(g.matmul(cat, g.param("fuse.w")), g.param("fuse.b")));
}

ShapeEmbedding encode_shape(const PointCloud& cloud, const ParameterStore& params,
                            const EncoderConfig& cfg) {
  Graph g(&params);
  auto r = build_shape_encoder(g, cloud, cfg);
  return {g.evaluate(r.parts), std::move(r.part_ids)};
}

TextEmbedding encode_text(const TokenSequence& tokens, const ParameterStore& params,
                          const EncoderConfig& cfg) {
  Graph g(&params);
  return {g.evaluate(build_text_encoder(g, tokens, cfg))};
}

SceneRepresentation encode_views(const MultiViewSet& views, const ParameterStore& params,
                                 const EncoderConfig& cfg) {
  Graph g(&params);
  auto r = build_view_encoder(g, views, cfg);
  return {g.evaluate(r.tokens), views.view_count()};
}

FusedShapeEmbedding fuse(const ShapeEmbedding& shape, const SceneRepresentation& scene,
                         const ParameterStore& params, const EncoderConfig& cfg) {
  Graph g(&params);
  auto parts = g.constant(shape.part_features);
  auto tokens = g.constant(scene.tokens);
  return {g.evaluate(build_fusion(g, parts, tokens, cfg))};
}

}  // namespace tsr
