#include "tsr/cli/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <utility>

#include "tsr/common.hpp"
#include "tsr/diff/checkpoint.hpp"
#include "tsr/enc/encoders.hpp"
#include "tsr/geom/render.hpp"
#include "tsr/match/score.hpp"

namespace tsr {

LoadedModel load_model(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  ExperimentConfig cfg = ExperimentConfig::load(path + ".config");
  if (cfg.hash() != ck.config_hash)
    throw DataError("checkpoint " + path + " does not match its config file (hash mismatch)");
  Vocabulary vocab = Vocabulary::load(path + ".vocab");
  cfg.enc.vocab_size = vocab.size();
  if (!ck.params.has("text.embed") || ck.params.value("text.embed").rows() != vocab.size())
    throw DataError("checkpoint embedding table does not match its vocabulary");
  return {std::move(cfg), std::move(ck.params), std::move(vocab)};
}

EncodedGallery encode_gallery(const Dataset& ds, const std::vector<int>& indices,
                              const ParameterStore& params, const EncoderConfig& cfg) {
  EncodedGallery out;
  for (int i : indices) {
    const auto& e = ds.shapes.at(static_cast<size_t>(i));
    PointCloud cloud = load_point_cloud(e.cloud_path);
    auto shape = encode_shape(cloud, params, cfg);
    auto scene = encode_views(
        render_views(cloud, cfg.view_count, cfg.image_height, cfg.image_width), params, cfg);
    out.fused.push_back(fuse(shape, scene, params, cfg).fused_features);
    out.shape_ids.push_back(e.id);
  }
  return out;
}

EncodedQueries encode_queries(const Dataset& ds, const std::vector<int>& indices,
                              const Vocabulary& vocab, const ParameterStore& params,
                              const EncoderConfig& cfg) {
  EncodedQueries out;
  for (size_t g = 0; g < indices.size(); ++g) {
    const auto& e = ds.shapes.at(static_cast<size_t>(indices[g]));
    for (size_t c = 0; c < e.captions.size(); ++c) {
      TokenSequence seq{vocab.encode(e.captions[c], /*map_unknown=*/true), vocab.size()};
      out.text.push_back(encode_text(seq, params, cfg).word_vectors);
      out.tags.push_back(e.id + "#" + std::to_string(c));
      out.owner.push_back(static_cast<int>(g));
    }
  }
  return out;
}

Tensor score_matrix(const std::vector<Tensor>& fused, const std::vector<Tensor>& text,
                    const MatchConfig& cfg) {
  Tensor s(static_cast<int>(fused.size()), static_cast<int>(text.size()));
  for (size_t i = 0; i < fused.size(); ++i)
    for (size_t j = 0; j < text.size(); ++j)
      s.at(static_cast<int>(i), static_cast<int>(j)) =
          matching_score(fused[i], text[j], cfg).score;
  return s;
}

MetricReport text_to_shape_metrics(const Tensor& scores, const std::vector<int>& owner) {
  Tensor t(scores.cols(), scores.rows());
  for (int i = 0; i < scores.rows(); ++i)
    for (int j = 0; j < scores.cols(); ++j) t.at(j, i) = scores.at(i, j);
  RelevanceMap rel;
  for (size_t j = 0; j < owner.size(); ++j) rel[static_cast<int>(j)] = {owner[j]};
  return score_matrix_metrics(t, rel);
}

EvalResult evaluate_model(const LoadedModel& model, const Dataset& ds, const std::string& split) {
  const auto& indices = ds.split(split);
  if (indices.empty()) throw DataError("split '" + split + "' is empty");

  auto gallery = encode_gallery(ds, indices, model.params, model.config.enc);
  auto queries = encode_queries(ds, indices, model.vocab, model.params, model.config.enc);

  EvalResult r;
  r.scores = score_matrix(gallery.fused, queries.text, model.config.match);
  r.shape_ids = std::move(gallery.shape_ids);
  r.caption_tags = std::move(queries.tags);
  r.caption_owner = queries.owner;

  RelevanceMap s2t;
  for (size_t j = 0; j < r.caption_owner.size(); ++j)
    s2t[r.caption_owner[j]].insert(static_cast<int>(j));
  r.directions["S2T"] = score_matrix_metrics(r.scores, s2t);
  r.directions["T2S"] = text_to_shape_metrics(r.scores, r.caption_owner);
  return r;
}

std::vector<RetrievalHit> retrieve_model(const LoadedModel& model, const Dataset& ds,
                                         const std::string& split, const std::string& text,
                                         int k, std::vector<std::string>* unknown_words) {
  if (k < 1) throw UsageError("k must be at least 1");
  if (tokenize(text).empty()) throw UsageError("query text has no tokens");

  std::vector<std::string> unknown;
  TokenSequence seq{model.vocab.encode(text, /*map_unknown=*/true, &unknown),
                    model.vocab.size()};
  if (unknown_words) *unknown_words = std::move(unknown);

  const auto& indices = ds.split(split);
  if (indices.empty()) throw DataError("split '" + split + "' is empty");
  auto gallery = encode_gallery(ds, indices, model.params, model.config.enc);
  Tensor query = encode_text(seq, model.params, model.config.enc).word_vectors;

  std::vector<double> scores(gallery.fused.size());
  for (size_t i = 0; i < gallery.fused.size(); ++i)
    scores[i] = matching_score(gallery.fused[i], query, model.config.match).score;

  auto order = rank(scores);
  const int take = std::min<int>(k, static_cast<int>(order.size()));
  std::vector<RetrievalHit> hits;
  for (int r = 0; r < take; ++r)
    hits.push_back({gallery.shape_ids[static_cast<size_t>(order[r])],
                    scores[static_cast<size_t>(order[r])]});
  return hits;
}

void run_eval(const std::string& ckpt, const std::string& data_dir, const std::string& split,
              bool as_json, std::ostream& out) {
  auto model = load_model(ckpt);
  auto ds = Dataset::load(data_dir);
  auto r = evaluate_model(model, ds, split);
  out << (as_json ? metrics_json(r.directions) : metrics_table(r.directions));
}

void run_retrieve(const std::string& ckpt, const std::string& data_dir, const std::string& split,
                  const std::string& text, int k, std::ostream& out, std::ostream& err) {
  auto model = load_model(ckpt);
  auto ds = Dataset::load(data_dir);
  std::vector<std::string> unknown;
  auto hits = retrieve_model(model, ds, split, text, k, &unknown);
  if (!unknown.empty()) {
    err << "warning: words outside the vocabulary map to the unknown token:";
    for (const auto& w : unknown) err << ' ' << w;
    err << '\n';
  }
  char line[128];
  for (size_t r = 0; r < hits.size(); ++r) {
    std::snprintf(line, sizeof(line), "%2zu. %-12s score %.6f", r + 1, hits[r].shape_id.c_str(),
                  hits[r].score);
    out << line << '\n';
  }
}

void run_inspect(const std::string& ckpt, std::ostream& out) {
  auto model = load_model(ckpt);
  char hex[24];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(model.config.hash()));
  out << "seed " << model.params.seed() << '\n';
  out << "config hash " << hex << '\n';
  out << "vocabulary " << model.vocab.size() << " tokens\n";
  out << "parameters " << model.params.count() << " tensors, " << model.params.scalar_count()
      << " scalars\n";
  for (const auto& name : model.params.names()) {
    const Tensor& t = model.params.value(name);
    out << "  " << name << ' ' << t.rows() << 'x' << t.cols() << '\n';
  }
  out << "config:\n" << model.config.serialize();
}

}  // namespace tsr
