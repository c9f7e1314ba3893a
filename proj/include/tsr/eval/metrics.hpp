#ifndef TSR_EVAL_METRICS_HPP
#define TSR_EVAL_METRICS_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tsr/diff/tensor.hpp"

namespace tsr {

// query id -> relevant gallery ids (each query must have at least one)
using RelevanceMap = std::map<int, std::set<int>>;
// query id -> gallery ids by descending score, ties broken by lower id
using RankingResult = std::map<int, std::vector<int>>;

// Stable descending sort of gallery ids 0..n-1 by score; ties keep id order.
std::vector<int> rank(const std::vector<double>& score_row);

// 100 x fraction of queries with at least one relevant item in the top k.
double recall_at_k(const RankingResult& rankings, const RelevanceMap& rel, int k);

// Binary-relevance NDCG in [0, 1], averaged over queries:
// DCG@k = sum_{i=1..k} rel(i)/log2(i+1), normalized by the ideal ordering.
double ndcg_at_k(const RankingResult& rankings, const RelevanceMap& rel, int k);

struct MetricReport {
  double rr1 = 0.0;    // percent
  double rr5 = 0.0;    // percent
  double ndcg5 = 0.0;  // x100, matching the reporting convention
};

// rows = queries (ids 0..Q-1), cols = gallery (ids 0..G-1).
MetricReport score_matrix_metrics(const Tensor& scores, const RelevanceMap& rel);

// {"S2T": {"RR@1": ..., "RR@5": ..., "NDCG@5": ...}, ...}, deterministic order.
std::string metrics_json(const std::map<std::string, MetricReport>& directions);
std::string metrics_table(const std::map<std::string, MetricReport>& directions);

}  // namespace tsr

#endif  // TSR_EVAL_METRICS_HPP
