#include "tsr/cli/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <utility>

#include "tsr/cli/runner.hpp"
#include "tsr/common.hpp"
#include "tsr/diff/adam.hpp"
#include "tsr/diff/checkpoint.hpp"
#include "tsr/enc/encoders.hpp"
#include "tsr/geom/render.hpp"
#include "tsr/match/score.hpp"
#include "tsr/mine/mining.hpp"

namespace tsr {

namespace {

// Everything about one training shape that does not depend on parameters,
// computed once and reused every epoch.
struct Sample {
  std::string id;
  ShapeInputs shape;
  ViewInputs views;
  std::vector<TokenSequence> captions;
};

}  // namespace

TrainResult train_model(const TrainOptions& opt) {
  ExperimentConfig cfg = opt.config;
  cfg.validate();
  const std::uint64_t config_hash = cfg.hash();

  Dataset ds = Dataset::load(opt.data_dir);
  cfg.enc.vocab_size = ds.vocab.size();

  ParameterStore store(cfg.seed);
  init_encoder_params(store, cfg.enc);

  std::vector<Sample> samples;
  for (int i : ds.train_indices) {
    const auto& e = ds.shapes.at(static_cast<size_t>(i));
    PointCloud cloud = load_point_cloud(e.cloud_path);
    Sample s;
    s.id = e.id;
    s.shape = prepare_shape_inputs(cloud, cfg.enc);
    s.views = prepare_view_inputs(
        render_views(cloud, cfg.enc.view_count, cfg.enc.image_height, cfg.enc.image_width),
        cfg.enc);
    for (const auto& text : e.captions) s.captions.push_back({ds.vocab.encode(text), ds.vocab.size()});
    samples.push_back(std::move(s));
  }
  if (cfg.epochs > 0 && samples.size() < 2)
    throw DataError("training needs at least 2 shapes for in-batch negatives");

  std::ofstream dump;
  if (!opt.dump_triplets_path.empty()) {
    dump.open(opt.dump_triplets_path);
    if (!dump) throw DataError("cannot open triplet dump file: " + opt.dump_triplets_path);
    dump << "anchor,pos,neg,loss\n";
    dump.precision(17);
  }

  AdamState adam;
  adam.config.lr = cfg.learning_rate;

  TrainResult result;
  result.config_hash = config_hash;
  result.vocab_size = ds.vocab.size();
  result.train_count = static_cast<int>(samples.size());

  const int n = static_cast<int>(samples.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng erng(Rng::derive(Rng::derive(cfg.seed, "epoch-order"), static_cast<uint64_t>(epoch)));
    erng.shuffle(order);

    std::vector<std::pair<int, int>> batches;  // [begin, end)
    for (int at = 0; at < n;) {
      int end = std::min(n, at + cfg.batch_size);
      if (n - end == 1) end = n;  // a lone trailing sample joins the last batch
      batches.emplace_back(at, end);
      at = end;
    }

    double epoch_loss = 0.0;
    for (size_t b = 0; b < batches.size(); ++b) {
      const auto [begin, end] = batches[b];
      const int bs = end - begin;

      Graph g(&store);
      std::vector<Graph::NodeId> fused(static_cast<size_t>(bs)), text(static_cast<size_t>(bs));
      std::vector<std::string> cap_tag(static_cast<size_t>(bs));
      for (int k = 0; k < bs; ++k) {
        Sample& s = samples[static_cast<size_t>(order[static_cast<size_t>(begin + k)])];
        auto sh = build_shape_encoder(g, s.shape, cfg.enc);
        auto vw = build_view_encoder(g, s.views, cfg.enc);
        fused[static_cast<size_t>(k)] = build_fusion(g, sh.parts, vw.tokens, cfg.enc);
        const size_t ci = (static_cast<size_t>(epoch) +
                           static_cast<size_t>(order[static_cast<size_t>(begin + k)])) %
                          s.captions.size();
        text[static_cast<size_t>(k)] = build_text_encoder(g, s.captions[ci], cfg.enc);
        cap_tag[static_cast<size_t>(k)] = s.id + "#" + std::to_string(ci);
      }

      // Pairwise transport scores and pooled cosines, as graph nodes for the
      // gradient path and as plain matrices for mining.
      Tensor semd(bs, bs), scos(bs, bs);
      std::vector<std::vector<Graph::NodeId>> sn(static_cast<size_t>(bs),
                                                 std::vector<Graph::NodeId>(static_cast<size_t>(bs)));
      auto cn = sn;
      for (int i = 0; i < bs; ++i)
        for (int j = 0; j < bs; ++j) {
          auto mg = build_matching_loss(g, fused[static_cast<size_t>(i)],
                                        text[static_cast<size_t>(j)], cfg.match);
          sn[static_cast<size_t>(i)][static_cast<size_t>(j)] = g.affine(mg.loss, -1.0);
          cn[static_cast<size_t>(i)][static_cast<size_t>(j)] =
              build_pooled_cosine(g, fused[static_cast<size_t>(i)], text[static_cast<size_t>(j)]);
          semd.at(i, j) = g.evaluate(sn[static_cast<size_t>(i)][static_cast<size_t>(j)]).at(0, 0);
          scos.at(i, j) = g.evaluate(cn[static_cast<size_t>(i)][static_cast<size_t>(j)]).at(0, 0);
        }

      auto mined_emd = batch_mining_loss({semd, ScoreDirection::kShapeToText}, cfg.mine);
      auto mined_cos = batch_mining_loss({scos, ScoreDirection::kShapeToText}, cfg.mine);

      auto hinge_mean = [&](const std::vector<Triplet>& ts,
                            const std::vector<std::vector<Graph::NodeId>>& nodes) {
        Graph::NodeId sum = -1;
        for (const auto& t : ts) {
          Graph::NodeId pos, neg;
          if (t.anchor == Anchor::kShape) {
            pos = nodes[static_cast<size_t>(t.anchor_index)][static_cast<size_t>(t.pos_index)];
            neg = nodes[static_cast<size_t>(t.anchor_index)][static_cast<size_t>(t.neg_index)];
          } else {
            pos = nodes[static_cast<size_t>(t.pos_index)][static_cast<size_t>(t.anchor_index)];
            neg = nodes[static_cast<size_t>(t.neg_index)][static_cast<size_t>(t.anchor_index)];
          }
          auto term = g.relu(g.affine(g.sub(neg, pos), 1.0, cfg.mine.margin));
          sum = sum < 0 ? term : g.add(sum, term);
        }
        return g.affine(sum, 1.0 / static_cast<double>(ts.size()));
      };
      auto loss_node = g.add(g.affine(hinge_mean(mined_emd.triplets, sn), cfg.match.alpha),
                             g.affine(hinge_mean(mined_cos.triplets, cn), 1.0 - cfg.match.alpha));

      const double batch_loss = g.evaluate(loss_node).at(0, 0);
      if (!std::isfinite(batch_loss))
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(b + 1));
      epoch_loss += batch_loss;

      if (dump.is_open()) {
        auto row_of = [&](int idx) { return samples[static_cast<size_t>(order[static_cast<size_t>(begin + idx)])].id; };
        for (const auto& t : mined_emd.triplets) {
          if (t.anchor == Anchor::kShape)
            dump << row_of(t.anchor_index) << ',' << cap_tag[static_cast<size_t>(t.pos_index)]
                 << ',' << cap_tag[static_cast<size_t>(t.neg_index)] << ',' << t.loss << '\n';
          else
            dump << cap_tag[static_cast<size_t>(t.anchor_index)] << ',' << row_of(t.pos_index)
                 << ',' << row_of(t.neg_index) << ',' << t.loss << '\n';
        }
      }

      auto grads = g.gradients(loss_node);
      adam_step(adam, store, grads);
    }

    epoch_loss /= static_cast<double>(batches.size());
    result.epoch_losses.push_back(epoch_loss);
    if (opt.log) *opt.log << "epoch " << (epoch + 1) << "/" << cfg.epochs << " loss " << epoch_loss
                          << std::endl;

    if (opt.validate_every > 0 && !ds.test_indices.empty() &&
        ((epoch + 1) % opt.validate_every == 0 || epoch + 1 == cfg.epochs) && opt.log) {
      auto gallery = encode_gallery(ds, ds.test_indices, store, cfg.enc);
      auto queries = encode_queries(ds, ds.test_indices, ds.vocab, store, cfg.enc);
      auto report = text_to_shape_metrics(score_matrix(gallery.fused, queries.text, cfg.match),
                                          queries.owner);
      *opt.log << "epoch " << (epoch + 1) << " held-out T2S RR@1 " << report.rr1 << std::endl;
    }
  }

  namespace fs = std::filesystem;
  if (const auto parent = fs::path(opt.out_path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  save_checkpoint(opt.out_path, store, config_hash);
  cfg.save(opt.out_path + ".config");
  ds.vocab.save(opt.out_path + ".vocab");
  return result;
}

}  // namespace tsr
