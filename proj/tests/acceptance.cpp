// Acceptance gate: one verdict line per criterion, nonzero exit when any
// fails. Criteria 7-9 share one synthetic benchmark and its trained
// checkpoints, so they run in order and 8/9 report a dependency failure if 7
// never produced its artifacts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsr/cli/config.hpp"
#include "tsr/cli/dataset.hpp"
#include "tsr/cli/runner.hpp"
#include "tsr/cli/synthetic.hpp"
#include "tsr/cli/trainer.hpp"
#include "tsr/common.hpp"
#include "tsr/diff/graph.hpp"
#include "tsr/diff/params.hpp"
#include "tsr/enc/encoders.hpp"
#include "tsr/eval/metrics.hpp"
#include "tsr/geom/interpolate.hpp"
#include "tsr/geom/point_cloud.hpp"
#include "tsr/geom/render.hpp"
#include "tsr/match/score.hpp"
#include "tsr/match/sinkhorn.hpp"
#include "tsr/mine/mining.hpp"
#include "support/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace tsr;

namespace {

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

std::vector<double> uniform_marginals(int n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

Tensor random_tensor(Rng& rng, int r, int c, double lo, double hi) {
  Tensor t(r, c);
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// ---------------------------------------------------------------- criterion 1

std::string sinkhorn_feasibility() {
  Rng rng(11);
  double worst_violation = 0.0;
  int worst_iters = 0;
  auto start = std::chrono::steady_clock::now();
  for (int c = 0; c < 100; ++c) {
    int n = rng.uniform_int(2, 16);
    int m = rng.uniform_int(2, 16);
    CostMatrix cost{random_tensor(rng, n, m, 0.0, 1.0), CostMatrix::Rule::kGeneric};
    MatchConfig cfg;
    cfg.epsilon = 0.05;
    cfg.max_iters = 200;
    cfg.tolerance = 1e-6;
    TransportPlan plan = sinkhorn_plan(cost, uniform_marginals(n), uniform_marginals(m), cfg);
    require(plan.converged, fmt("case %d (%dx%d) did not converge", c, n, m));
    require(plan.violation < 1e-6,
            fmt("case %d violation %.3e >= 1e-6", c, plan.violation));
    require(plan.iterations < 200, fmt("case %d took %d iterations", c, plan.iterations));
    worst_violation = std::max(worst_violation, plan.violation);
    worst_iters = std::max(worst_iters, plan.iterations);
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(secs < 1.0, fmt("suite took %.3f s, budget is 1 s", secs));
  return fmt("100 random plans converged, worst violation %.2e, worst %d iterations, %.3f s",
             worst_violation, worst_iters, secs);
}

// ---------------------------------------------------------------- criterion 2

std::string sinkhorn_vs_exact() {
  double worst_rel = 0.0, worst_violation = 0.0;
  for (int n = 2; n <= 6; ++n) {
    for (int seed = 0; seed < 20; ++seed) {
      Rng rng(Rng::derive(1000 + n, seed));
      Tensor cost = random_tensor(rng, n, n, 0.0, 1.0);
      MatchConfig cfg;
      cfg.epsilon = 0.01;
      cfg.max_iters = 200000;
      cfg.tolerance = 1e-9;
      TransportPlan plan = sinkhorn_plan({cost, CostMatrix::Rule::kGeneric},
                                         uniform_marginals(n), uniform_marginals(n), cfg);
      // near-tied permutations give tiny-epsilon Sinkhorn a slow tail, so the
      // optimality gap is the requirement; feasibility only needs to be close
      // enough for <plan, cost> to be comparable against the optimum
      require(plan.violation <= 1e-4,
              fmt("n=%d seed=%d violation %.3e", n, seed, plan.violation));
      worst_violation = std::max(worst_violation, plan.violation);
      double emd = 0.0;
      for (size_t i = 0; i < plan.plan.size(); ++i) emd += plan.plan[i] * cost[i];
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double best = std::numeric_limits<double>::infinity();
      do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += cost.at(i, perm[i]);
        best = std::min(best, total / static_cast<double>(n));
      } while (std::next_permutation(perm.begin(), perm.end()));
      double rel = std::abs(emd - best) / best;
      require(rel <= 0.02,
              fmt("n=%d seed=%d plan cost %.6f vs optimum %.6f (rel %.4f)", n, seed, emd,
                  best, rel));
      worst_rel = std::max(worst_rel, rel);
    }
  }
  return fmt("plan cost within 2%% of the permutation optimum for n=2..6, 20 seeds each "
             "(worst rel %.2e, worst violation %.1e)",
             worst_rel, worst_violation);
}

// ---------------------------------------------------------------- criterion 3

std::string gradient_checks() {
  EncoderConfig cfg;
  cfg.embed_dim = 8;
  cfg.vocab_size = 10;
  cfg.max_len = 8;
  cfg.stage1_centers = 8;
  cfg.stage2_centers = 4;
  cfg.local_k = 3;
  cfg.interp_k = 2;
  cfg.view_count = 2;
  cfg.image_height = 8;
  cfg.image_width = 8;
  cfg.num_octaves = 1;
  cfg.conv_base = 2;
  cfg.patch_size = 2;
  cfg.depth = 1;
  cfg.heads = 2;
  cfg.validate();

  MatchConfig mc;
  mc.epsilon = 0.1;
  mc.lambda = 0.7;
  mc.alpha = 0.4;
  mc.max_iters = 6;
  mc.tolerance = 0.0;  // fixed-length unroll keeps the loss smooth

  double worst = 0.0;
  int total_compared = 0;
  for (int seed = 0; seed < 10; ++seed) {
    ParameterStore store(7 * seed + 3);
    init_encoder_params(store, cfg);
    // Zero-initialized biases put relu kinks exactly at the evaluation point
    // (dead image regions make a conv pre-activation equal its bias), where
    // central differences measure half the one-sided slope. Finite-difference
    // checks need a generic point, so nudge every entry well past the step.
    Rng jitter(Rng::derive(777, seed));
    for (const std::string& name : store.names()) {
      Tensor& p = store.value(name);
      for (size_t i = 0; i < p.size(); ++i)
        p[i] += (jitter.uniform() < 0.5 ? -1.0 : 1.0) * jitter.uniform(0.01, 0.03);
    }
    Rng rng(Rng::derive(909, seed));
    Tensor positions = random_tensor(rng, 14, 3, -1.0, 1.0);
    std::vector<int> labels(14);
    for (int i = 0; i < 14; ++i) labels[i] = i % 2;
    PointCloud cloud{std::move(positions), std::nullopt, std::move(labels)};
    MultiViewSet views = render_views(cloud, cfg.view_count, cfg.image_height, cfg.image_width);
    TokenSequence pos_tokens{{2, rng.uniform_int(0, 9), rng.uniform_int(0, 9)}, cfg.vocab_size};
    TokenSequence neg_tokens{{rng.uniform_int(0, 9), 3}, cfg.vocab_size};

    // One graph through all four encoders and both loss paths, composed into
    // the training hinge with margins large enough to keep the kink inactive.
    Graph g(&store);
    ShapeGraphResult shape = build_shape_encoder(g, cloud, cfg);
    ViewGraphResult scene = build_view_encoder(g, views, cfg);
    Graph::NodeId fused = build_fusion(g, shape.parts, scene.tokens, cfg);
    Graph::NodeId text_pos = build_text_encoder(g, pos_tokens, cfg);
    Graph::NodeId text_neg = build_text_encoder(g, neg_tokens, cfg);
    MatchingGraph match_pos = build_matching_loss(g, fused, text_pos, mc);
    MatchingGraph match_neg = build_matching_loss(g, fused, text_neg, mc);
    Graph::NodeId hinge_emd = g.relu(g.affine(
        g.sub(g.affine(match_neg.loss, -1.0), g.affine(match_pos.loss, -1.0)), 1.0, 6.0));
    Graph::NodeId hinge_cos =
        g.relu(g.affine(g.sub(build_pooled_cosine(g, fused, text_neg),
                              build_pooled_cosine(g, fused, text_pos)),
                        1.0, 3.0));
    Graph::NodeId loss =
        g.add(g.affine(hinge_emd, mc.alpha), g.affine(hinge_cos, 1.0 - mc.alpha));

    tsrtest::GradCheckResult res = tsrtest::fd_gradcheck(g, loss, store);
    require(res.compared > 500, fmt("seed %d compared only %d entries", seed, res.compared));
    require(res.ok(1e-4), fmt("seed %d rel err %.3e at %s", seed, res.max_rel,
                              res.worst.c_str()));
    worst = std::max(worst, res.max_rel);
    total_compared += res.compared;
  }
  return fmt("all encoders and both loss paths match finite differences over 10 seeds "
             "(%d entries, worst rel err %.2e)",
             total_compared, worst);
}

// ---------------------------------------------------------------- criterion 4

std::string interpolation_oracle() {
  {  // hand-derived example: distances 1 and 2, features 0 and 3, p=2
    Tensor positions(2, 3);
    positions.at(0, 0) = 1.0;
    positions.at(1, 1) = 2.0;
    Tensor features(2, 1);
    features.at(0, 0) = 0.0;
    features.at(1, 0) = 3.0;
    PointCloud source{std::move(positions), std::move(features), std::nullopt};
    Tensor query(1, 3);
    Tensor out = propagate_features(source, query, 2, 2.0);
    require(std::abs(out.at(0, 0) - 0.6) < 1e-12,
            fmt("hand example gave %.17g, expected 0.6", out.at(0, 0)));
  }
  {  // a query on top of a stored point returns its feature verbatim
    Rng rng(21);
    Tensor positions = random_tensor(rng, 6, 3, -1.0, 1.0);
    Tensor features = random_tensor(rng, 6, 2, -2.0, 2.0);
    Tensor query(1, 3);
    for (int c = 0; c < 3; ++c) query.at(0, c) = positions.at(4, c);
    PointCloud source{std::move(positions), features, std::nullopt};
    Tensor out = propagate_features(source, query, 3, 2.0);
    require(out.at(0, 0) == features.at(4, 0) && out.at(0, 1) == features.at(4, 1),
            "coincident query did not return the stored feature exactly");
  }
  Rng rng(31);
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    int n = rng.uniform_int(4, 20);
    int d = rng.uniform_int(1, 3);
    int m = rng.uniform_int(1, 5);
    int k = rng.uniform_int(1, std::min(n, 5));
    double p = rng.uniform(0.7, 3.0);
    Tensor positions = random_tensor(rng, n, 3, -1.0, 1.0);
    Tensor features = random_tensor(rng, n, d, -2.0, 2.0);
    Tensor queries = random_tensor(rng, m, 3, -1.0, 1.0);
    PointCloud source{positions, features, std::nullopt};
    Tensor out = propagate_features(source, queries, k, p);
    for (int q = 0; q < m; ++q) {
      // independent evaluation: full sort, then the plain weighted average
      std::vector<std::pair<double, int>> order(n);
      for (int i = 0; i < n; ++i) {
        double dx = positions.at(i, 0) - queries.at(q, 0);
        double dy = positions.at(i, 1) - queries.at(q, 1);
        double dz = positions.at(i, 2) - queries.at(q, 2);
        order[i] = {std::sqrt(dx * dx + dy * dy + dz * dz), i};
      }
      std::sort(order.begin(), order.end());
      for (int col = 0; col < d; ++col) {
        double num = 0.0, den = 0.0;
        for (int j = 0; j < k; ++j) {
          double w = 1.0 / std::pow(order[j].first, p);
          num += w * features.at(order[j].second, col);
          den += w;
        }
        double expected = order[0].first < 1e-8 ? features.at(order[0].second, col) : num / den;
        double got = out.at(q, col);
        worst = std::max(worst, std::abs(got - expected));
        require(std::abs(got - expected) <= 1e-12,
                fmt("case %d query %d col %d: got %.17g expected %.17g", c, q, col, got,
                    expected));
      }
    }
  }
  return fmt("hand example, coincident snap, and 50 randomized cases agree "
             "(worst abs diff %.2e)",
             worst);
}

// ---------------------------------------------------------------- criterion 5

int brute_force_negative(const std::vector<double>& line, int pos, double margin, bool hardest) {
  int best = -1;
  if (hardest) {
    for (int j = 0; j < static_cast<int>(line.size()); ++j)
      if (j != pos && (best < 0 || line[j] > line[best])) best = j;
    return best;
  }
  double sp = line[pos];
  for (int j = 0; j < static_cast<int>(line.size()); ++j)  // band: (sp - margin, sp)
    if (j != pos && line[j] > sp - margin && line[j] < sp && (best < 0 || line[j] > line[best]))
      best = j;
  if (best >= 0) return best;
  for (int j = 0; j < static_cast<int>(line.size()); ++j)  // hardest below the positive
    if (j != pos && line[j] < sp && (best < 0 || line[j] > line[best])) best = j;
  if (best >= 0) return best;
  for (int j = 0; j < static_cast<int>(line.size()); ++j)  // easiest overall
    if (j != pos && (best < 0 || line[j] < line[best])) best = j;
  return best;
}

std::string mining_oracle() {
  require(triplet_loss(0.5, 0.5, 0.25) == 0.25, "margin-at-equality case is not exact");
  require(triplet_loss(0.75, 0.5, 0.25) == 0.0, "satisfied-triplet case is not zero");

  Rng rng(41);
  for (int c = 0; c < 100; ++c) {
    int b = rng.uniform_int(2, 32);
    double margin = rng.uniform(0.05, 0.45);
    Tensor scores = random_tensor(rng, b, b, -1.0, 1.0);
    bool hardest = c % 2 == 1;
    MiningConfig cfg;
    cfg.margin = margin;
    cfg.hardest = hardest;
    BatchMiningResult got = batch_mining_loss({scores, ScoreDirection::kShapeToText}, cfg);

    std::vector<Triplet> expected;
    std::vector<double> line(b);
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < b; ++j) line[j] = scores.at(i, j);
      int neg = brute_force_negative(line, i, margin, hardest);
      expected.push_back(
          {Anchor::kShape, i, i, neg, std::max(0.0, margin + line[neg] - line[i])});
    }
    for (int j = 0; j < b; ++j) {
      for (int i = 0; i < b; ++i) line[i] = scores.at(i, j);
      int neg = brute_force_negative(line, j, margin, hardest);
      expected.push_back(
          {Anchor::kText, j, j, neg, std::max(0.0, margin + line[neg] - line[j])});
    }
    double total = 0.0;
    for (const Triplet& t : expected) total += t.loss;
    double mean = total / static_cast<double>(expected.size());

    require(got.triplets.size() == expected.size(),
            fmt("case %d mined %zu triplets, expected %zu", c, got.triplets.size(),
                expected.size()));
    for (size_t t = 0; t < expected.size(); ++t) {
      const Triplet &g = got.triplets[t], &e = expected[t];
      require(g.anchor == e.anchor && g.anchor_index == e.anchor_index &&
                  g.pos_index == e.pos_index && g.neg_index == e.neg_index && g.loss == e.loss,
              fmt("case %d triplet %zu disagrees with brute force", c, t));
    }
    require(got.loss == mean, fmt("case %d mean loss %.17g vs brute force %.17g", c,
                                  got.loss, mean));
  }
  return "matches brute-force selection and losses exactly on 100 matrices, both "
         "semi-hard and hardest";
}

// ---------------------------------------------------------------- criterion 6

std::string metric_oracles() {
  {  // single relevant item at rank 2
    RankingResult rankings{{0, {3, 1, 4, 0, 2}}};
    RelevanceMap rel{{0, {1}}};
    double got = ndcg_at_k(rankings, rel, 5);
    require(std::abs(got - 1.0 / std::log2(3.0)) < 1e-12,
            fmt("rank-2 case gave %.17g, expected 1/log2(3)", got));
  }
  Rng rng(51);
  for (int c = 0; c < 50; ++c) {
    int gallery = rng.uniform_int(3, 25);
    int queries = rng.uniform_int(2, 12);
    Tensor scores = random_tensor(rng, queries, gallery, -1.0, 1.0);
    if (c % 2 == 1)  // quantize to force score ties
      for (size_t i = 0; i < scores.size(); ++i) scores[i] = std::round(scores[i] * 4.0) / 4.0;
    RelevanceMap rel;
    for (int q = 0; q < queries; ++q) {
      int count = rng.uniform_int(1, std::min(3, gallery));
      while (static_cast<int>(rel[q].size()) < count) rel[q].insert(rng.uniform_int(0, gallery - 1));
    }
    RankingResult rankings;
    for (int q = 0; q < queries; ++q) {
      std::vector<double> row(gallery);
      for (int j = 0; j < gallery; ++j) row[j] = scores.at(q, j);
      rankings[q] = rank(row);
      // independent ranking: explicit (-score, id) total order
      std::vector<int> naive(gallery);
      std::iota(naive.begin(), naive.end(), 0);
      std::sort(naive.begin(), naive.end(), [&](int a, int b) {
        return row[a] != row[b] ? row[a] > row[b] : a < b;
      });
      require(rankings[q] == naive, fmt("case %d query %d ranking disagrees", c, q));
    }
    for (int k : {1, 5}) {
      int hits = 0;
      for (int q = 0; q < queries; ++q) {
        const std::vector<int>& order = rankings[q];
        for (int i = 0; i < std::min<int>(k, gallery); ++i)
          if (rel[q].count(order[i])) {
            ++hits;
            break;
          }
      }
      double naive_rr = 100.0 * static_cast<double>(hits) / static_cast<double>(queries);
      double got = recall_at_k(rankings, rel, k);
      require(got == naive_rr,
              fmt("case %d RR@%d %.17g vs naive %.17g", c, k, got, naive_rr));
    }
    double naive_total = 0.0;
    for (int q = 0; q < queries; ++q) {
      const std::vector<int>& order = rankings[q];
      double dcg = 0.0;
      for (int i = 1; i <= std::min(5, gallery); ++i)
        if (rel[q].count(order[i - 1])) dcg += 1.0 / std::log2(static_cast<double>(i + 1));
      double idcg = 0.0;
      for (int i = 1; i <= std::min<int>(5, static_cast<int>(rel[q].size())); ++i)
        idcg += 1.0 / std::log2(static_cast<double>(i + 1));
      naive_total += dcg / idcg;
    }
    double naive_ndcg = naive_total / static_cast<double>(queries);
    double got = ndcg_at_k(rankings, rel, 5);
    require(got == naive_ndcg, fmt("case %d NDCG@5 %.17g vs naive %.17g", c, got, naive_ndcg));
  }
  return "RR@1, RR@5, and NDCG@5 equal naive reimplementations exactly on 50 instances, "
         "rank-2 case within 1e-12";
}

// ------------------------------------------------------------- criteria 7-9

struct BenchmarkState {
  fs::path root;
  std::string data_dir;
  int gallery = 0;
  TrainOptions base;  // semi-hard desk run shared by 7 and 9
  std::vector<double> losses;
  double rr1_semi = 0.0;
  double rr5_semi = 0.0;
  std::string json_semi;
};

BenchmarkState bench;

std::pair<MetricReport, std::string> eval_t2s(const std::string& ckpt, const Dataset& ds) {
  LoadedModel model = load_model(ckpt);
  EvalResult ev = evaluate_model(model, ds, "test");
  return {ev.directions.at("T2S"), metrics_json(ev.directions)};
}

std::string end_to_end() {
  bench.root = fs::temp_directory_path() / "tsr_acceptance";
  fs::remove_all(bench.root);
  fs::create_directories(bench.root);
  bench.data_dir = (bench.root / "data").string();

  SyntheticOptions gen;
  gen.seed = 42;
  gen.shape_count = 200;
  gen.captions_per_shape = 5;
  gen.point_count = 512;
  gen.out_dir = bench.data_dir;
  gen_synthetic(gen);
  Dataset ds = Dataset::load(bench.data_dir);
  bench.gallery = static_cast<int>(ds.test_indices.size());

  bench.base.config = preset_named("desk");
  bench.base.config.seed = 5;
  bench.base.data_dir = bench.data_dir;
  bench.base.out_path = (bench.root / "semi.ckpt").string();
  bench.base.log = nullptr;

  std::clock_t cpu0 = std::clock();
  auto wall0 = std::chrono::steady_clock::now();
  TrainResult result = train_model(bench.base);
  double cpu_secs = static_cast<double>(std::clock() - cpu0) / CLOCKS_PER_SEC;
  double wall_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  bench.losses = result.epoch_losses;

  TrainOptions init = bench.base;
  init.config.epochs = 0;
  init.out_path = (bench.root / "init.ckpt").string();
  train_model(init);

  auto [trained, trained_json] = eval_t2s(bench.base.out_path, ds);
  auto [random_init, random_json] = eval_t2s(init.out_path, ds);
  bench.rr1_semi = trained.rr1;
  bench.rr5_semi = trained.rr5;
  bench.json_semi = trained_json;

  require(cpu_secs <= 900.0, fmt("training took %.0f s CPU, budget is 900 s", cpu_secs));
  double chance = 100.0 / static_cast<double>(bench.gallery);
  require(trained.rr1 >= 5.0 * chance,
          fmt("T2S RR@1 %.1f below 5x chance %.1f", trained.rr1, 5.0 * chance));
  require(trained.rr5 >= 3.0 * random_init.rr5,
          fmt("T2S RR@5 %.1f below 3x random-init %.1f", trained.rr5,
              3.0 * random_init.rr5));
  require(bench.losses.size() == 50, fmt("expected 50 epoch losses, got %zu",
                                         bench.losses.size()));
  require(bench.losses.back() < bench.losses.front(),
          fmt("loss did not drop: epoch 1 %.6f vs epoch 50 %.6f", bench.losses.front(),
              bench.losses.back()));
  return fmt("50 epochs on 200 shapes in %.0f s CPU (%.0f s wall); T2S RR@1 %.1f >= %.1f "
             "(5x chance on %d), RR@5 %.1f >= %.1f (3x random-init %.1f), loss %.4f -> %.4f",
             cpu_secs, wall_secs, bench.rr1_semi, 5.0 * chance, bench.gallery, bench.rr5_semi,
             3.0 * random_init.rr5, random_init.rr5, bench.losses.front(),
             bench.losses.back());
}

std::string ablation_direction() {
  require(!bench.json_semi.empty(), "depends on the criterion 7 benchmark, which failed");
  TrainOptions opt = bench.base;
  opt.config.mine.hardest = true;
  opt.out_path = (bench.root / "hardest.ckpt").string();
  train_model(opt);
  Dataset ds = Dataset::load(bench.data_dir);
  auto [hardest, json] = eval_t2s(opt.out_path, ds);
  require(hardest.rr1 <= bench.rr1_semi,
          fmt("hardest mining RR@1 %.1f exceeds semi-hard %.1f", hardest.rr1,
              bench.rr1_semi));
  return fmt("hardest-negative mining T2S RR@1 %.1f <= semi-hard %.1f, same seed and budget",
             hardest.rr1, bench.rr1_semi);
}

std::string slurp_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string determinism() {
  require(!bench.json_semi.empty(), "depends on the criterion 7 benchmark, which failed");
  TrainOptions rerun = bench.base;
  rerun.out_path = (bench.root / "rerun.ckpt").string();
  train_model(rerun);
  Dataset ds = Dataset::load(bench.data_dir);
  auto [report, json] = eval_t2s(rerun.out_path, ds);
  std::string first = slurp_bytes(bench.base.out_path);
  std::string second = slurp_bytes(rerun.out_path);
  require(first == second, fmt("checkpoints differ (%zu vs %zu bytes)", first.size(),
                               second.size()));
  require(json == bench.json_semi, "metric JSON differs between identical runs");
  return fmt("repeated run reproduced the checkpoint bit-for-bit (%zu bytes) and the "
             "metric JSON verbatim",
             first.size());
}

}  // namespace

int main() {
  std::pair<const char*, std::function<std::string()>> criteria[] = {
      {"transport feasibility", sinkhorn_feasibility},
      {"transport optimality", sinkhorn_vs_exact},
      {"gradient checks", gradient_checks},
      {"interpolation oracle", interpolation_oracle},
      {"mining oracle", mining_oracle},
      {"metric oracles", metric_oracles},
      {"synthetic end-to-end", end_to_end},
      {"ablation direction", ablation_direction},
      {"determinism", determinism},
  };
  int failures = 0;
  for (int i = 0; i < 9; ++i) {
    std::string verdict, detail;
    try {
      detail = criteria[i].second();
      verdict = "PASS";
    } catch (const std::exception& e) {
      detail = e.what();
      verdict = "FAIL";
      ++failures;
    }
    std::printf("criterion %d (%s): %s - %s\n", i + 1, criteria[i].first, verdict.c_str(),
                detail.c_str());
    std::fflush(stdout);
  }
  if (failures == 0)
    std::printf("all 9 acceptance criteria passed\n");
  else
    std::printf("%d of 9 acceptance criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
