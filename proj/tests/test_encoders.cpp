#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "support/gradcheck.hpp"
#include "tsr/common.hpp"
#include "tsr/enc/encoders.hpp"
#include "tsr/enc/vocab.hpp"
#include "tsr/geom/render.hpp"

using namespace tsr;

namespace {

EncoderConfig toy_cfg() {
  EncoderConfig cfg;
  cfg.embed_dim = 16;
  cfg.vocab_size = 12;
  cfg.stage1_centers = 16;
  cfg.stage2_centers = 8;
  cfg.local_k = 4;
  cfg.view_count = 2;
  cfg.image_height = 8;
  cfg.image_width = 8;
  cfg.num_octaves = 1;
  cfg.conv_base = 4;
  cfg.patch_size = 2;
  cfg.depth = 2;
  cfg.heads = 4;
  return cfg;
}

PointCloud random_cloud(Rng& rng, int n, int segments = 0) {
  Tensor pos(n, 3);
  for (size_t i = 0; i < pos.size(); ++i) pos[i] = rng.uniform(-1.0, 1.0);
  PointCloud cloud{std::move(pos), std::nullopt, std::nullopt};
  if (segments > 0) {
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % segments;
    cloud.segment_labels = std::move(labels);
  }
  return cloud;
}

// All-identical views: one random image, one pose, straight-ahead rays.
MultiViewSet identical_views(Rng& rng, int v, int h, int w) {
  MultiViewSet set;
  set.height = h;
  set.width = w;
  Tensor img(h, w);
  for (size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform(0.0, 1.0);
  Tensor rays(h * w, 3);
  for (int i = 0; i < rays.rows(); ++i) {
    rays.at(i, 0) = 0.0;
    rays.at(i, 1) = 0.0;
    rays.at(i, 2) = -1.0;
  }
  CameraPose pose;
  pose.origin = {0.4, -0.3, 1.2};
  pose.forward = {0.0, 0.0, -1.0};
  pose.up = {0.0, 1.0, 0.0};
  pose.right = {1.0, 0.0, 0.0};
  for (int i = 0; i < v; ++i) {
    set.images.push_back(img);
    set.poses.push_back(pose);
    set.rays.push_back(rays);
  }
  return set;
}

using Vec = std::vector<double>;

Vec matvec(const Vec& x, const Tensor& w) {
  REQUIRE(static_cast<int>(x.size()) == w.rows());
  Vec out(static_cast<size_t>(w.cols()), 0.0);
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) out[static_cast<size_t>(j)] += x[static_cast<size_t>(i)] * w.at(i, j);
  return out;
}

Vec gru_step_ref(const ParameterStore& s, const std::string& p, const Vec& x, const Vec& h) {
  const int d = static_cast<int>(h.size());
  auto gate = [&](const char* w, const char* u, const char* b) {
    Vec xw = matvec(x, s.value(p + w));
    Vec hu = matvec(h, s.value(p + u));
    const Tensor& bias = s.value(p + b);
    Vec out(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) out[j] = xw[j] + hu[j] + bias.at(0, j);
    return out;
  };
  Vec r = gate(".wr", ".ur", ".br");
  Vec z = gate(".wz", ".uz", ".bz");
  for (int j = 0; j < d; ++j) {
    r[j] = 1.0 / (1.0 + std::exp(-r[j]));
    z[j] = 1.0 / (1.0 + std::exp(-z[j]));
  }
  Vec xn = matvec(x, s.value(p + ".wn"));
  Vec hn = matvec(h, s.value(p + ".un"));
  const Tensor& bn = s.value(p + ".bn");
  Vec out(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) {
    double cand = std::tanh(xn[j] + r[j] * hn[j] + bn.at(0, j));
    out[j] = (1.0 - z[j]) * cand + z[j] * h[j];
  }
  return out;
}

Tensor encode_text_ref(const ParameterStore& s, const std::vector<int>& ids, int d) {
  const int m = static_cast<int>(ids.size());
  const Tensor& emb = s.value("text.embed");
  auto row = [&](int t) {
    Vec x(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) x[j] = emb.at(ids[static_cast<size_t>(t)], j);
    return x;
  };
  std::vector<Vec> hf(static_cast<size_t>(m)), hr(static_cast<size_t>(m));
  Vec h(static_cast<size_t>(d), 0.0);
  for (int t = 0; t < m; ++t) hf[t] = h = gru_step_ref(s, "text.f", row(t), h);
  h.assign(static_cast<size_t>(d), 0.0);
  for (int t = m - 1; t >= 0; --t) hr[t] = h = gru_step_ref(s, "text.r", row(t), h);

  const Tensor& pw = s.value("text.proj.w");
  const Tensor& pb = s.value("text.proj.b");
  Tensor out(m, pw.cols());
  for (int t = 0; t < m; ++t) {
    Vec w(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) w[j] = 0.5 * (hf[t][j] + hr[t][j]);
    Vec o = matvec(w, pw);
    for (int j = 0; j < pw.cols(); ++j) out.at(t, j) = o[j] + pb.at(0, j);
  }
  return out;
}

Tensor layer_norm_ref(const Tensor& x, double eps = 1e-5) {
  Tensor out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    double mu = 0.0;
    for (int j = 0; j < x.cols(); ++j) mu += x.at(i, j);
    mu /= x.cols();
    double var = 0.0;
    for (int j = 0; j < x.cols(); ++j) {
      double dlt = x.at(i, j) - mu;
      var += dlt * dlt;
    }
    var /= x.cols();
    double istd = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < x.cols(); ++j) out.at(i, j) = (x.at(i, j) - mu) * istd;
  }
  return out;
}

void zero_param(ParameterStore& s, const std::string& name) {
  const Tensor& v = s.value(name);
  s.set(name, Tensor(v.rows(), v.cols(), 0.0));
}

void zero_transformer(ParameterStore& s, int depth) {
  for (int l = 0; l < depth; ++l) {
    std::string p = "views.blk" + std::to_string(l);
    for (const char* n : {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo", ".attn.bq", ".attn.bk",
                          ".attn.bv", ".attn.bo", ".ff.w1", ".ff.b1", ".ff.w2", ".ff.b2"})
      zero_param(s, p + n);
  }
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits on whitespace and punctuation") {
  auto t = tokenize("A small, WOODEN table!");
  REQUIRE(t.size() == 4);
  CHECK(t[0] == "a");
  CHECK(t[1] == "small");
  CHECK(t[2] == "wooden");
  CHECK(t[3] == "table");

  CHECK(tokenize("").empty());
  CHECK(tokenize(" .,;:!?-- ").empty());

  auto nums = tokenize("4 legs\tand 1 top");
  REQUIRE(nums.size() == 5);
  CHECK(nums[0] == "4");
  CHECK(nums[3] == "1");

  auto utf8 = tokenize("caf\xc3\xa9 table");
  REQUIRE(utf8.size() == 2);
  CHECK(utf8[0] == "caf\xc3\xa9");
}

TEST_CASE("vocabulary build keeps reserved ids and sorts tokens") {
  auto v = Vocabulary::build({"A red chair", "a blue chair."});
  REQUIRE(v.size() == 6);
  CHECK(v.token(Vocabulary::kPadId) == "<pad>");
  CHECK(v.token(Vocabulary::kUnkId) == "<unk>");
  CHECK(v.id("a") == 2);
  CHECK(v.id("blue") == 3);
  CHECK(v.id("chair") == 4);
  CHECK(v.id("red") == 5);
  CHECK(v.contains("chair"));
  CHECK_FALSE(v.contains("zebra"));
  CHECK(v.id("zebra") == Vocabulary::kUnkId);
  CHECK_THROWS_AS(v.token(6), DataError);
}

TEST_CASE("closed vocabulary encoding and unknown mapping") {
  auto v = Vocabulary::build({"a red chair"});
  auto ids = v.encode("A RED chair");
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == v.id("a"));
  CHECK(ids[2] == v.id("chair"));

  CHECK_THROWS_AS(v.encode("a red zebra"), DataError);
  CHECK_THROWS_AS(v.encode("..."), DataError);

  std::vector<std::string> unknown;
  auto mapped = v.encode("a GREEN zebra", true, &unknown);
  REQUIRE(mapped.size() == 3);
  CHECK(mapped[1] == Vocabulary::kUnkId);
  CHECK(mapped[2] == Vocabulary::kUnkId);
  REQUIRE(unknown.size() == 2);
  CHECK(unknown[0] == "green");
  CHECK(unknown[1] == "zebra");
}

TEST_CASE("vocabulary file round-trip and validation") {
  auto v = Vocabulary::build({"tall wooden shelf", "short metal shelf"});
  v.save("vocab_test.txt");
  auto loaded = Vocabulary::load("vocab_test.txt");
  REQUIRE(loaded.size() == v.size());
  for (int i = 0; i < v.size(); ++i) CHECK(loaded.token(i) == v.token(i));
  CHECK(loaded.id("shelf") == v.id("shelf"));

  {
    std::ofstream bad("vocab_bad1.txt");
    bad << "table\nchair\n";
  }
  CHECK_THROWS_AS(Vocabulary::load("vocab_bad1.txt"), DataError);
  {
    std::ofstream bad("vocab_bad2.txt");
    bad << "<pad>\n<unk>\nchair\nchair\n";
  }
  CHECK_THROWS_AS(Vocabulary::load("vocab_bad2.txt"), DataError);
  CHECK_THROWS_AS(Vocabulary::load("vocab_missing.txt"), DataError);

  std::remove("vocab_test.txt");
  std::remove("vocab_bad1.txt");
  std::remove("vocab_bad2.txt");
}

TEST_CASE("caption file round-trip and validation") {
  std::vector<CaptionRecord> recs{{"shape_000", "a red chair with four legs"},
                                  {"shape_001", "tall table"}};
  save_caption_file("captions_test.tsv", recs);
  auto loaded = load_caption_file("captions_test.tsv");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].shape_id == "shape_000");
  CHECK(loaded[0].text == "a red chair with four legs");
  CHECK(loaded[1].shape_id == "shape_001");

  {
    std::ofstream bad("captions_bad.tsv");
    bad << "shape_000 no tab here\n";
  }
  CHECK_THROWS_AS(load_caption_file("captions_bad.tsv"), DataError);
  CHECK_THROWS_AS(load_caption_file("captions_missing.tsv"), DataError);
  CHECK_THROWS_AS(save_caption_file("captions_out.tsv", {{"", "text"}}), DataError);

  std::remove("captions_test.tsv");
  std::remove("captions_bad.tsv");
  std::remove("captions_out.tsv");
}

TEST_CASE("ray features at zero components and parity") {
  Tensor rays(2, 3);
  rays.at(0, 0) = 1.0;  // components 1, 0, 0
  rays.at(1, 0) = -0.36;
  rays.at(1, 1) = 0.48;
  rays.at(1, 2) = 0.8;
  auto f = ray_encode(rays, 0, 3);
  REQUIRE(f.rows() == 2);
  REQUIRE(f.cols() == 18);
  // zero components: sin exactly 0, cos exactly 1 at every octave
  for (int c = 1; c < 3; ++c)
    for (int o = 0; o < 3; ++o) {
      CHECK(f.at(0, c * 6 + 2 * o) == 0.0);
      CHECK(f.at(0, c * 6 + 2 * o + 1) == 1.0);
    }

  Tensor neg(1, 3);
  for (int c = 0; c < 3; ++c) neg.at(0, c) = -rays.at(1, c);
  auto fn = ray_encode(neg, 0, 3);
  for (int c = 0; c < 3; ++c)
    for (int o = 0; o < 3; ++o) {
      CHECK(fn.at(0, c * 6 + 2 * o) == -f.at(1, c * 6 + 2 * o));
      CHECK(fn.at(0, c * 6 + 2 * o + 1) == f.at(1, c * 6 + 2 * o + 1));
    }

  Tensor wide(1, 4);
  CHECK_THROWS_AS(ray_encode(wide, 0, 2), ShapeError);
  CHECK_THROWS_AS(ray_encode(rays, 0, 0), ConfigError);
}

TEST_CASE("ray feature octave layout matches direct evaluation") {
  Tensor rays(1, 3);
  rays.at(0, 0) = 0.25;
  auto f = ray_encode(rays, 0, 2);
  REQUIRE(f.cols() == 12);
  // first component u = 0.25: sin(pi/4), cos(pi/4), sin(pi/2), cos(pi/2)
  CHECK(f.at(0, 0) == doctest::Approx(0.7071067811865476).epsilon(1e-12));
  CHECK(f.at(0, 1) == doctest::Approx(0.7071067811865476).epsilon(1e-12));
  CHECK(f.at(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(f.at(0, 3)) < 1e-12);

  // a shifted octave window scales the arguments by 2^start
  auto g2 = ray_encode(rays, 2, 1);
  CHECK(g2.at(0, 0) == doctest::Approx(std::sin(4.0 * 3.14159265358979323846 * 0.25)).epsilon(1e-12));
}

TEST_CASE("ray features lie on the unit circle per component and octave") {
  Rng rng(11);
  Tensor rays(6, 3);
  for (int i = 0; i < 6; ++i) {
    double v[3], n = 0.0;
    for (double& c : v) c = rng.uniform(-1.0, 1.0);
    for (double c : v) n += c * c;
    n = std::sqrt(n);
    for (int c = 0; c < 3; ++c) rays.at(i, c) = v[c] / n;
  }
  for (int start : {0, 1, 3}) {
    auto f = ray_encode(rays, start, 2);
    for (int i = 0; i < f.rows(); ++i)
      for (int c = 0; c < 3; ++c)
        for (int o = 0; o < 2; ++o) {
          double s = f.at(i, c * 4 + 2 * o);
          double cc = f.at(i, c * 4 + 2 * o + 1);
          CHECK(std::abs(s * s + cc * cc - 1.0) < 1e-12);
        }
  }
}

TEST_CASE("shape encoder zero weights and segment grouping") {
  auto cfg = toy_cfg();
  ParameterStore store(5);
  init_encoder_params(store, cfg);
  for (const char* n : {"shape.stage1.w", "shape.stage1.b", "shape.stage2.w", "shape.stage2.b"})
    zero_param(store, n);

  Rng rng(21);
  auto cloud = random_cloud(rng, 40, 2);
  for (size_t i = 0; i < cloud.segment_labels->size(); ++i)
    (*cloud.segment_labels)[i] = (i < 20) ? 0 : 3;

  auto emb = encode_shape(cloud, store, cfg);
  REQUIRE(emb.part_ids == std::vector<int>{0, 3});
  REQUIRE(emb.part_features.rows() == 2);
  REQUIRE(emb.part_features.cols() == cfg.embed_dim);
  for (size_t i = 0; i < emb.part_features.size(); ++i) CHECK(emb.part_features[i] == 0.0);

  cloud.segment_labels = std::vector<int>(40, 5);
  auto one = encode_shape(cloud, store, cfg);
  CHECK(one.part_ids == std::vector<int>{5});
  CHECK(one.part_features.rows() == 1);

  cloud.segment_labels.reset();
  auto global = encode_shape(cloud, store, cfg);
  CHECK(global.part_ids == std::vector<int>{0});
  CHECK(global.part_features.rows() == 1);
}

TEST_CASE("shape encoder handles a single-point cloud") {
  auto cfg = toy_cfg();
  ParameterStore store(6);
  init_encoder_params(store, cfg);
  Tensor pos(1, 3);
  pos.at(0, 1) = 0.5;
  PointCloud cloud{std::move(pos), std::nullopt, std::nullopt};
  auto emb = encode_shape(cloud, store, cfg);
  CHECK(emb.part_features.rows() == 1);
  CHECK(emb.part_features.cols() == cfg.embed_dim);
}

TEST_CASE("shape encoder is invariant to point permutation") {
  auto cfg = toy_cfg();
  ParameterStore store(7);
  init_encoder_params(store, cfg);

  Rng rng(31);
  auto cloud = random_cloud(rng, 50, 3);
  auto base = encode_shape(cloud, store, cfg);

  std::vector<int> perm(50);
  for (int i = 0; i < 50; ++i) perm[i] = i;
  rng.shuffle(perm);
  Tensor pos(50, 3);
  std::vector<int> labels(50);
  for (int i = 0; i < 50; ++i) {
    for (int c = 0; c < 3; ++c) pos.at(i, c) = cloud.positions.at(perm[i], c);
    labels[i] = (*cloud.segment_labels)[static_cast<size_t>(perm[i])];
  }
  PointCloud shuffled{std::move(pos), std::nullopt, std::move(labels)};
  auto moved = encode_shape(shuffled, store, cfg);

  REQUIRE(moved.part_ids == base.part_ids);
  REQUIRE(moved.part_features.rows() == base.part_features.rows());
  for (size_t i = 0; i < base.part_features.size(); ++i)
    CHECK(std::abs(moved.part_features[i] - base.part_features[i]) < 1e-9);
}

TEST_CASE("shape encoder gradients match finite differences") {
  auto cfg = toy_cfg();
  ParameterStore store(8);
  init_encoder_params(store, cfg);
  Rng rng(41);
  auto cloud = random_cloud(rng, 30, 2);

  Graph g(&store);
  auto parts = build_shape_encoder(g, cloud, cfg);
  auto loss = g.sum(parts.parts);
  auto res = tsrtest::fd_gradcheck(g, loss, store);
  INFO(res.worst);
  CHECK(res.ok());
  CHECK(res.compared > 0);
}

TEST_CASE("text encoder matches a reference bidirectional implementation") {
  auto cfg = toy_cfg();
  ParameterStore store(9);
  init_encoder_params(store, cfg);

  TokenSequence seq{{3, 9, 1, 7, 2}, cfg.vocab_size};
  auto out = encode_text(seq, store, cfg);
  auto ref = encode_text_ref(store, seq.ids, cfg.embed_dim);
  REQUIRE(out.word_vectors.rows() == 5);
  REQUIRE(out.word_vectors.cols() == cfg.embed_dim);
  for (size_t i = 0; i < ref.size(); ++i)
    CHECK(std::abs(out.word_vectors[i] - ref[i]) < 1e-12);
}

TEST_CASE("text encoder zero weights give zero vectors") {
  auto cfg = toy_cfg();
  ParameterStore store(10);
  init_encoder_params(store, cfg);
  for (const auto& name : store.names())
    if (name.rfind("text.", 0) == 0 && name != "text.embed") zero_param(store, name);

  auto out = encode_text(TokenSequence{{4, 2, 8}, cfg.vocab_size}, store, cfg);
  for (size_t i = 0; i < out.word_vectors.size(); ++i) CHECK(out.word_vectors[i] == 0.0);
}

TEST_CASE("single-token and reversed sequences under tied directions") {
  auto cfg = toy_cfg();
  ParameterStore store(12);
  init_encoder_params(store, cfg);
  for (const char* s : {".wr", ".wz", ".wn", ".ur", ".uz", ".un", ".br", ".bz", ".bn"})
    store.set(std::string("text.r") + s, store.value(std::string("text.f") + s));

  // m = 1: both directions see the same step, so w1 equals the forward state.
  TokenSequence one{{6}, cfg.vocab_size};
  auto out = encode_text(one, store, cfg);
  const Tensor& emb = store.value("text.embed");
  Vec x(static_cast<size_t>(cfg.embed_dim));
  for (int j = 0; j < cfg.embed_dim; ++j) x[j] = emb.at(6, j);
  Vec h = gru_step_ref(store, "text.f", x, Vec(static_cast<size_t>(cfg.embed_dim), 0.0));
  Vec proj = matvec(h, store.value("text.proj.w"));
  for (int j = 0; j < cfg.embed_dim; ++j)
    CHECK(std::abs(out.word_vectors.at(0, j) - (proj[j] + store.value("text.proj.b").at(0, j))) <
          1e-12);

  // reversing the tokens mirrors the rows exactly
  TokenSequence seq{{2, 5, 3, 8, 4, 2}, cfg.vocab_size};
  TokenSequence rev = seq;
  std::reverse(rev.ids.begin(), rev.ids.end());
  auto a = encode_text(seq, store, cfg);
  auto b = encode_text(rev, store, cfg);
  const int m = static_cast<int>(seq.ids.size());
  for (int t = 0; t < m; ++t)
    for (int j = 0; j < cfg.embed_dim; ++j)
      CHECK(b.word_vectors.at(t, j) == a.word_vectors.at(m - 1 - t, j));
}

TEST_CASE("text encoder input validation") {
  auto cfg = toy_cfg();
  ParameterStore store(13);
  init_encoder_params(store, cfg);

  CHECK_THROWS_AS(encode_text(TokenSequence{{}, cfg.vocab_size}, store, cfg), DataError);
  CHECK_THROWS_AS(encode_text(TokenSequence{{cfg.vocab_size}, cfg.vocab_size}, store, cfg),
                  DataError);
  CHECK_THROWS_AS(encode_text(TokenSequence{{-1}, cfg.vocab_size}, store, cfg), DataError);
  CHECK_THROWS_AS(encode_text(TokenSequence{{1, 2}, cfg.vocab_size - 1}, store, cfg), ConfigError);

  auto small = cfg;
  small.max_len = 2;
  CHECK_THROWS_AS(encode_text(TokenSequence{{1, 2, 3}, cfg.vocab_size}, store, small), DataError);
}

TEST_CASE("text encoder gradients match finite differences") {
  auto cfg = toy_cfg();
  cfg.embed_dim = 8;
  cfg.heads = 2;
  ParameterStore store(14);
  init_encoder_params(store, cfg);

  Graph g(&store);
  auto node = build_text_encoder(g, TokenSequence{{2, 7, 4}, cfg.vocab_size}, cfg);
  auto loss = g.sum(node);
  auto res = tsrtest::fd_gradcheck(g, loss, store);
  INFO(res.worst);
  CHECK(res.ok());
  CHECK(res.compared > 0);
}

TEST_CASE("view encoder token count and determinism at desk scale") {
  EncoderConfig cfg;  // desk defaults
  cfg.vocab_size = 2;
  REQUIRE(cfg.token_count() == 32);

  Rng rng(51);
  auto cloud = random_cloud(rng, 120);
  auto views = render_views(cloud, cfg.view_count, cfg.image_height, cfg.image_width);

  ParameterStore a(77);
  init_encoder_params(a, cfg);
  auto scene = encode_views(views, a, cfg);
  REQUIRE(scene.tokens.rows() == 32);
  REQUIRE(scene.tokens.cols() == cfg.embed_dim);
  CHECK(scene.view_count == 8);

  ParameterStore b(77);
  init_encoder_params(b, cfg);
  auto again = encode_views(views, b, cfg);
  for (size_t i = 0; i < scene.tokens.size(); ++i) CHECK(again.tokens[i] == scene.tokens[i]);
}

TEST_CASE("identical views produce identical token blocks") {
  auto cfg = toy_cfg();
  cfg.view_count = 3;
  ParameterStore store(15);
  init_encoder_params(store, cfg);

  Rng rng(61);
  auto views = identical_views(rng, 3, cfg.image_height, cfg.image_width);
  auto scene = encode_views(views, store, cfg);
  const int per = cfg.patches_per_view();
  REQUIRE(scene.tokens.rows() == 3 * per);
  for (int v = 1; v < 3; ++v)
    for (int p = 0; p < per; ++p)
      for (int j = 0; j < cfg.embed_dim; ++j)
        CHECK(std::abs(scene.tokens.at(v * per + p, j) - scene.tokens.at(p, j)) < 1e-12);
}

TEST_CASE("zero transformer weights reduce to layer norm of embedded patches") {
  auto cfg1 = toy_cfg();
  cfg1.depth = 1;
  auto cfg3 = toy_cfg();
  cfg3.depth = 3;

  Rng rng(71);
  auto cloud = random_cloud(rng, 40);
  auto views = render_views(cloud, cfg1.view_count, cfg1.image_height, cfg1.image_width);

  ParameterStore s1(99), s3(99);
  init_encoder_params(s1, cfg1);
  init_encoder_params(s3, cfg3);
  zero_transformer(s1, cfg1.depth);
  zero_transformer(s3, cfg3.depth);

  auto t1 = encode_views(views, s1, cfg1);
  auto t3 = encode_views(views, s3, cfg3);
  REQUIRE(t1.tokens.size() == t3.tokens.size());
  for (size_t i = 0; i < t1.tokens.size(); ++i) CHECK(t1.tokens[i] == t3.tokens[i]);

  // and the surviving pipeline is exactly the final layer norm of the
  // patch + positional + camera embeddings
  Graph g(&s1);
  auto built = build_view_encoder(g, views, cfg1);
  auto pre = g.evaluate(built.pre_tokens);
  auto ref = layer_norm_ref(pre);
  const Tensor& toks = g.evaluate(built.tokens);
  for (size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(toks[i] - ref[i]) < 1e-12);
}

TEST_CASE("view encoder configuration errors") {
  auto cfg = toy_cfg();
  ParameterStore store(16);
  init_encoder_params(store, cfg);

  Rng rng(81);
  auto cloud = random_cloud(rng, 30);
  auto views = render_views(cloud, 4, cfg.image_height, cfg.image_width);
  CHECK_THROWS_AS(encode_views(views, store, cfg), ConfigError);  // 4 views, cfg wants 2

  auto odd = toy_cfg();
  odd.image_height = 10;  // post-conv extent 3 is not divisible by patch 2
  odd.image_width = 10;
  CHECK_THROWS_AS(odd.validate(), ConfigError);

  auto badheads = toy_cfg();
  badheads.heads = 5;
  CHECK_THROWS_AS(badheads.validate(), ConfigError);
}

TEST_CASE("fusion matches a direct computation and stays nonnegative") {
  auto cfg = toy_cfg();
  ParameterStore store(17);
  init_encoder_params(store, cfg);

  Rng rng(91);
  Tensor parts(5, cfg.embed_dim), tokens(7, cfg.embed_dim);
  for (size_t i = 0; i < parts.size(); ++i) parts[i] = rng.uniform(-1.0, 1.0);
  for (size_t i = 0; i < tokens.size(); ++i) tokens[i] = rng.uniform(-1.0, 1.0);

  Graph g(&store);
  auto fused = build_fusion(g, g.constant(parts), g.constant(tokens), cfg);
  const Tensor& out = g.evaluate(fused);
  REQUIRE(out.rows() == 5);
  REQUIRE(out.cols() == cfg.embed_dim);

  const Tensor& w = store.value("fuse.w");
  const Tensor& b = store.value("fuse.b");
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < cfg.embed_dim; ++j) {
      double acc = b.at(0, j);
      for (int k = 0; k < cfg.embed_dim; ++k) acc += parts.at(i, k) * w.at(k, j);
      for (int k = 0; k < cfg.embed_dim; ++k) {
        double pooled = 0.0;
        for (int r = 0; r < 7; ++r) pooled += tokens.at(r, k);
        acc += (pooled / 7.0) * w.at(cfg.embed_dim + k, j);
      }
      double expect = acc > 0.0 ? acc : 0.0;
      CHECK(std::abs(out.at(i, j) - expect) < 1e-12);
      CHECK(out.at(i, j) >= 0.0);
    }

  zero_param(store, "fuse.w");
  zero_param(store, "fuse.b");
  ShapeEmbedding se{parts, {0, 1, 2, 3, 4}};
  SceneRepresentation sc{tokens, 1};
  auto fz = fuse(se, sc, store, cfg);
  for (size_t i = 0; i < fz.fused_features.size(); ++i) CHECK(fz.fused_features[i] == 0.0);
}

TEST_CASE("fusion dimension mismatch raises") {
  auto cfg = toy_cfg();
  ParameterStore store(18);
  init_encoder_params(store, cfg);
  Graph g(&store);
  auto narrow = g.constant(Tensor(3, cfg.embed_dim - 2, 0.1));
  auto tokens = g.constant(Tensor(4, cfg.embed_dim, 0.1));
  CHECK_THROWS_AS(build_fusion(g, narrow, tokens, cfg), ShapeError);
}

TEST_CASE("view and fusion gradients match finite differences end-to-end") {
  auto cfg = toy_cfg();
  ParameterStore store(19);
  init_encoder_params(store, cfg);

  Rng rng(101);
  auto cloud = random_cloud(rng, 24, 2);
  auto views = render_views(cloud, cfg.view_count, cfg.image_height, cfg.image_width);

  Graph g(&store);
  auto parts = build_shape_encoder(g, cloud, cfg);
  auto scene = build_view_encoder(g, views, cfg);
  auto fused = build_fusion(g, parts.parts, scene.tokens, cfg);
  auto loss = g.sum(fused);

  auto res = tsrtest::fd_gradcheck(g, loss, store);
  INFO(res.worst);
  CHECK(res.ok());
  CHECK(res.compared > 1000);
}
