#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tsr/common.hpp"
#include "tsr/eval/metrics.hpp"

using namespace tsr;

namespace {

// Independent reimplementations used as oracles.
double oracle_recall(const RankingResult& rankings, const RelevanceMap& rel, int k) {
  int hits = 0;
  for (const auto& [qid, ranked] : rankings) {
    bool hit = false;
    for (int i = 0; i < std::min<int>(k, ranked.size()); ++i)
      hit = hit || rel.at(qid).count(ranked[i]) > 0;
    hits += hit ? 1 : 0;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double oracle_ndcg(const RankingResult& rankings, const RelevanceMap& rel, int k) {
  double total = 0.0;
  for (const auto& [qid, ranked] : rankings) {
    double dcg = 0.0;
    for (int i = 1; i <= std::min<int>(k, ranked.size()); ++i)
      if (rel.at(qid).count(ranked[i - 1])) dcg += 1.0 / std::log2(static_cast<double>(i + 1));
    double idcg = 0.0;
    for (int i = 1; i <= std::min<int>(k, rel.at(qid).size()); ++i)
      idcg += 1.0 / std::log2(static_cast<double>(i + 1));
    total += dcg / idcg;
  }
  return total / static_cast<double>(rankings.size());
}

RankingResult random_instance(Rng& rng, int queries, int gallery, RelevanceMap& rel) {
  RankingResult rankings;
  for (int q = 0; q < queries; ++q) {
    std::vector<double> row(gallery);
    for (double& s : row) s = rng.uniform(-1.0, 1.0);
    rankings[q] = rank(row);
    int n_rel = rng.uniform_int(1, 4);
    std::set<int> r;
    while (static_cast<int>(r.size()) < n_rel) r.insert(rng.uniform_int(0, gallery - 1));
    rel[q] = r;
  }
  return rankings;
}

}  // namespace

TEST_CASE("rank keeps sorted input and breaks ties by id") {
  CHECK(rank({0.9, 0.5, 0.1}) == std::vector<int>{0, 1, 2});
  CHECK(rank({0.5, 0.5, 0.5}) == std::vector<int>{0, 1, 2});
  CHECK(rank({0.1, 0.5, 0.5}) == std::vector<int>{1, 2, 0});
  CHECK_THROWS_AS(rank({}), DataError);
  CHECK_THROWS_AS(rank({0.1, std::nan("")}), NumericError);
}

TEST_CASE("rank matches a full-sort oracle on a large row") {
  Rng rng(1001);
  std::vector<double> row(100);
  for (double& s : row) s = rng.uniform(-5.0, 5.0);
  std::vector<int> ids(100);
  for (int i = 0; i < 100; ++i) ids[i] = i;
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  });
  CHECK(rank(row) == ids);
}

TEST_CASE("perfect retrieval recalls 100 and just-missed recalls 0") {
  RankingResult rankings{{0, {0, 1, 2}}, {1, {1, 0, 2}}};
  RelevanceMap rel{{0, {0}}, {1, {1}}};
  CHECK(recall_at_k(rankings, rel, 1) == 100.0);
  // relevant item parked exactly at rank k+1
  RankingResult miss{{0, {1, 2, 0}}, {1, {0, 2, 1}}};
  CHECK(recall_at_k(miss, rel, 2) == 0.0);
  CHECK(recall_at_k(miss, rel, 3) == 100.0);
}

TEST_CASE("recall is non-decreasing in k") {
  Rng rng(7);
  RelevanceMap rel;
  RankingResult rankings = random_instance(rng, 15, 30, rel);
  double last = 0.0;
  for (int k = 1; k <= 30; ++k) {
    double r = recall_at_k(rankings, rel, k);
    CHECK(r >= last);
    last = r;
  }
  CHECK(last == 100.0);  // full depth always finds the relevant items
}

TEST_CASE("ndcg hits the textbook values") {
  RelevanceMap rel{{0, {5}}};
  RankingResult first{{0, {5, 1, 2, 3, 4}}};
  CHECK(ndcg_at_k(first, rel, 5) == 1.0);
  RankingResult second{{0, {1, 5, 2, 3, 4}}};
  CHECK(ndcg_at_k(second, rel, 5) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
  RankingResult out_of_window{{0, {1, 2, 3, 4, 6, 5}}};
  CHECK(ndcg_at_k(out_of_window, rel, 5) == 0.0);
}

TEST_CASE("ndcg is 1 exactly when the top prefix is all relevant") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    RelevanceMap rel;
    RankingResult rankings = random_instance(rng, 10, 20, rel);
    double v = ndcg_at_k(rankings, rel, 5);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // crafted: two relevant items in the top-2 prefix, k=5
  RelevanceMap rel{{0, {3, 7}}};
  RankingResult perfect{{0, {7, 3, 0, 1, 2}}};
  CHECK(ndcg_at_k(perfect, rel, 5) == 1.0);
  RankingResult swapped{{0, {7, 0, 3, 1, 2}}};
  CHECK(ndcg_at_k(swapped, rel, 5) < 1.0);
}

TEST_CASE("metrics are invariant under monotone score transforms") {
  Rng rng(19);
  std::vector<double> row(25);
  for (double& s : row) s = rng.uniform(-2.0, 2.0);
  std::vector<double> warped(25);
  for (int i = 0; i < 25; ++i) warped[i] = std::tanh(row[i]) * 3.0 + 1.0;
  CHECK(rank(row) == rank(warped));
}

TEST_CASE("metrics equal naive reimplementations on random instances") {
  Rng rng(2026);
  for (int trial = 0; trial < 50; ++trial) {
    int queries = rng.uniform_int(1, 20), gallery = rng.uniform_int(6, 50);
    RelevanceMap rel;
    RankingResult rankings = random_instance(rng, queries, gallery, rel);
    for (int k : {1, 5}) CHECK(recall_at_k(rankings, rel, k) == oracle_recall(rankings, rel, k));
    CHECK(ndcg_at_k(rankings, rel, 5) == oracle_ndcg(rankings, rel, 5));
  }
}

TEST_CASE("metrics validate queries and k") {
  RankingResult empty;
  RelevanceMap rel{{0, {1}}};
  CHECK_THROWS_AS(recall_at_k(empty, rel, 1), DataError);
  RankingResult rankings{{0, {0, 1}}};
  CHECK_THROWS_AS(recall_at_k(rankings, RelevanceMap{}, 1), DataError);
  CHECK_THROWS_AS(recall_at_k(rankings, RelevanceMap{{0, {}}}, 1), DataError);
  CHECK_THROWS_AS(recall_at_k(rankings, rel, 0), ConfigError);
  CHECK_THROWS_AS(ndcg_at_k(rankings, rel, -1), ConfigError);
}

TEST_CASE("score matrix metrics wire rows to queries") {
  // gallery of 3; query i's relevant item is gallery i; scores favor identity
  Tensor scores(2, 3, {0.9, 0.2, 0.1, 0.3, 0.8, 0.2});
  RelevanceMap rel{{0, {0}}, {1, {1}}};
  MetricReport m = score_matrix_metrics(scores, rel);
  CHECK(m.rr1 == 100.0);
  CHECK(m.rr5 == 100.0);
  CHECK(m.ndcg5 == 100.0);
}

TEST_CASE("reports serialize deterministically with fixed key order") {
  std::map<std::string, MetricReport> dirs;
  dirs["S2T"] = {12.5, 40.0, 33.25};
  dirs["T2S"] = {8.0, 30.0, 25.0};
  std::string json = metrics_json(dirs);
  CHECK(json == metrics_json(dirs));
  size_t s2t = json.find("\"S2T\""), t2s = json.find("\"T2S\"");
  size_t rr1 = json.find("\"RR@1\""), rr5 = json.find("\"RR@5\""), ndcg = json.find("\"NDCG@5\"");
  REQUIRE(s2t != std::string::npos);
  REQUIRE(t2s != std::string::npos);
  CHECK(s2t < t2s);
  CHECK(rr1 < rr5);
  CHECK(rr5 < ndcg);
  std::string table = metrics_table(dirs);
  CHECK(table.find("S2T") != std::string::npos);
  CHECK(table.find("12.50") != std::string::npos);
  CHECK(table.find("NDCG@5") != std::string::npos);
}
