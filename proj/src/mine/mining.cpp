#include "tsr/mine/mining.hpp"

#include <algorithm>
#include <cmath>

#include "tsr/common.hpp"

namespace tsr {

void MiningConfig::validate() const {
  if (!(margin > 0.0)) throw ConfigError("mining config: margin must be positive");
}

void ScoreMatrix::validate() const {
  if (scores.rows() != scores.cols())
    throw ShapeError("score matrix must be square, got " + scores.shape_str());
  if (scores.rows() < 2) throw ShapeError("score matrix needs at least 2 pairs to mine");
}

namespace {

void check_line(const std::vector<double>& scores, int pos_index) {
  if (scores.size() < 2) throw ShapeError("negative selection needs at least 2 scores");
  if (pos_index < 0 || pos_index >= static_cast<int>(scores.size()))
    throw ShapeError("positive index " + std::to_string(pos_index) + " outside score line of " +
                     std::to_string(scores.size()));
  for (double s : scores)
    if (!std::isfinite(s)) throw NumericError("negative selection saw a non-finite score");
}

}  // namespace

int select_semi_hard(const std::vector<double>& scores, int pos_index, double margin) {
  check_line(scores, pos_index);
  const double sp = scores[pos_index];
  int band = -1, below = -1, easiest = -1;
  for (int j = 0; j < static_cast<int>(scores.size()); ++j) {
    if (j == pos_index) continue;
    const double s = scores[j];
    if (s > sp - margin && s < sp && (band < 0 || s > scores[band])) band = j;
    if (s < sp && (below < 0 || s > scores[below])) below = j;
    if (easiest < 0 || s < scores[easiest]) easiest = j;
  }
  if (band >= 0) return band;
  if (below >= 0) return below;
  return easiest;
}

int select_hardest(const std::vector<double>& scores, int pos_index) {
  check_line(scores, pos_index);
  int best = -1;
  for (int j = 0; j < static_cast<int>(scores.size()); ++j) {
    if (j == pos_index) continue;
    if (best < 0 || scores[j] > scores[best]) best = j;
  }
  return best;
}

double triplet_loss(double score_pos, double score_neg, double margin) {
  if (!std::isfinite(score_pos) || !std::isfinite(score_neg) || !std::isfinite(margin))
    throw NumericError("triplet loss saw a non-finite input");
  return std::max(0.0, margin + score_neg - score_pos);
}

BatchMiningResult batch_mining_loss(const ScoreMatrix& scores, const MiningConfig& cfg) {
  cfg.validate();
  scores.validate();
  const Tensor& s = scores.scores;
  const int b = s.rows();
  const Anchor row_anchor =
      scores.direction == ScoreDirection::kShapeToText ? Anchor::kShape : Anchor::kText;
  const Anchor col_anchor =
      scores.direction == ScoreDirection::kShapeToText ? Anchor::kText : Anchor::kShape;

  BatchMiningResult out;
  out.triplets.reserve(2 * b);
  auto mine = [&](const std::vector<double>& line, int pos, Anchor kind) {
    int neg = cfg.hardest ? select_hardest(line, pos) : select_semi_hard(line, pos, cfg.margin);
    double loss = triplet_loss(line[pos], line[neg], cfg.margin);
    out.triplets.push_back({kind, pos, pos, neg, loss});
  };
  std::vector<double> line(b);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < b; ++j) line[j] = s.at(i, j);
    mine(line, i, row_anchor);
  }
  for (int j = 0; j < b; ++j) {
    for (int i = 0; i < b; ++i) line[i] = s.at(i, j);
    mine(line, j, col_anchor);
  }
  double total = 0.0;
  for (const Triplet& t : out.triplets) total += t.loss;
  out.loss = total / static_cast<double>(out.triplets.size());
  return out;
}

}  // namespace tsr
