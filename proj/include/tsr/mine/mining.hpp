#ifndef TSR_MINE_MINING_HPP
#define TSR_MINE_MINING_HPP

#include <vector>

#include "tsr/diff/tensor.hpp"

namespace tsr {

struct MiningConfig {
  double margin = 0.2;
  bool hardest = false;  // ablation: pick the globally hardest negative
  void validate() const;
};

enum class ScoreDirection { kShapeToText, kTextToShape };

// B x B similarities; entry (i, j) scores row-entity i against
// column-entity j, and the diagonal holds the ground-truth pairs.
struct ScoreMatrix {
  Tensor scores;
  ScoreDirection direction = ScoreDirection::kShapeToText;
  void validate() const;
};

enum class Anchor { kShape, kText };

struct Triplet {
  Anchor anchor;
  int anchor_index;  // which row/column was scanned
  int pos_index;     // diagonal partner (== anchor_index)
  int neg_index;     // mined negative
  double loss;
};

struct BatchMiningResult {
  double loss = 0.0;  // mean over the 2B mined triplets
  std::vector<Triplet> triplets;
};

// Semi-hard pick over one line of similarities: hardest negative inside the
// band (s_pos - margin, s_pos); if the band is empty, hardest negative below
// s_pos; if nothing scores below s_pos, the easiest negative. Ties resolve
// to the lower index.
int select_semi_hard(const std::vector<double>& scores, int pos_index, double margin);

// Ablation variant: highest-scoring negative, band ignored.
int select_hardest(const std::vector<double>& scores, int pos_index);

// max(0, margin + score_neg - score_pos); scores are similarities.
double triplet_loss(double score_pos, double score_neg, double margin);

// Mines every row and every column of the score matrix (2B triplets: one per
// row anchor against column negatives, one per column anchor against row
// negatives) and averages the margin losses.
BatchMiningResult batch_mining_loss(const ScoreMatrix& scores, const MiningConfig& cfg);

}  // namespace tsr

#endif  // TSR_MINE_MINING_HPP
