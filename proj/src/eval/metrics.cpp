#include "tsr/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "tsr/common.hpp"

namespace tsr {

std::vector<int> rank(const std::vector<double>& score_row) {
  if (score_row.empty()) throw DataError("rank: empty score row");
  for (double s : score_row)
    if (!std::isfinite(s)) throw NumericError("rank: non-finite score");
  std::vector<int> ids(score_row.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](int a, int b) { return score_row[a] > score_row[b]; });
  return ids;
}

namespace {

void check_queries(const RankingResult& rankings, const RelevanceMap& rel, int k) {
  if (k < 1) throw ConfigError("metrics: k must be >= 1");
  if (rankings.empty()) throw DataError("metrics: empty query set");
  for (const auto& [qid, ranked] : rankings) {
    auto it = rel.find(qid);
    if (it == rel.end() || it->second.empty())
      throw DataError("metrics: query " + std::to_string(qid) + " has no relevant items");
    if (ranked.empty()) throw DataError("metrics: query " + std::to_string(qid) + " has no ranking");
  }
}

}  // namespace

double recall_at_k(const RankingResult& rankings, const RelevanceMap& rel, int k) {
  check_queries(rankings, rel, k);
  int hits = 0;
  for (const auto& [qid, ranked] : rankings) {
    const std::set<int>& relevant = rel.at(qid);
    int depth = std::min<int>(k, static_cast<int>(ranked.size()));
    for (int i = 0; i < depth; ++i)
      if (relevant.count(ranked[i])) {
        ++hits;
        break;
      }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double ndcg_at_k(const RankingResult& rankings, const RelevanceMap& rel, int k) {
  check_queries(rankings, rel, k);
  double total = 0.0;
  for (const auto& [qid, ranked] : rankings) {
    const std::set<int>& relevant = rel.at(qid);
    double dcg = 0.0;
    int depth = std::min<int>(k, static_cast<int>(ranked.size()));
    for (int i = 1; i <= depth; ++i)
      if (relevant.count(ranked[i - 1])) dcg += 1.0 / std::log2(static_cast<double>(i + 1));
    double idcg = 0.0;
    int ideal = std::min<int>(k, static_cast<int>(relevant.size()));
    for (int i = 1; i <= ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i + 1));
    total += dcg / idcg;
  }
  return total / static_cast<double>(rankings.size());
}

MetricReport score_matrix_metrics(const Tensor& scores, const RelevanceMap& rel) {
  RankingResult rankings;
  std::vector<double> row(scores.cols());
  for (int i = 0; i < scores.rows(); ++i) {
    for (int j = 0; j < scores.cols(); ++j) row[j] = scores.at(i, j);
    rankings[i] = rank(row);
  }
  MetricReport out;
  out.rr1 = recall_at_k(rankings, rel, 1);
  out.rr5 = recall_at_k(rankings, rel, 5);
  out.ndcg5 = 100.0 * ndcg_at_k(rankings, rel, 5);
  return out;
}

std::string metrics_json(const std::map<std::string, MetricReport>& directions) {
  nlohmann::ordered_json root;
  for (const auto& [name, report] : directions) {
    root[name] = {{"RR@1", report.rr1}, {"RR@5", report.rr5}, {"NDCG@5", report.ndcg5}};
  }
  return root.dump(2) + "\n";
}

std::string metrics_table(const std::map<std::string, MetricReport>& directions) {
  std::string out = "direction    RR@1    RR@5  NDCG@5\n";
  for (const auto& [name, report] : directions) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-9s %7.2f %7.2f %7.2f\n", name.c_str(), report.rr1,
                  report.rr5, report.ndcg5);
    out += line;
  }
  return out;
}

}  // namespace tsr
