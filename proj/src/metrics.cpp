#include "drboost/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "drboost/common.hpp"

namespace drboost {

namespace {
void check_aligned(std::size_t results, std::size_t golds) {
  if (results == 0) throw ArgumentError("metric over an empty query set");
  if (results != golds) throw ArgumentError("results and golds are not aligned");
}
}  // namespace

std::vector<GoldSet> golds_of(const std::vector<TrainPair>& pairs) {
  std::vector<GoldSet> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.emplace_back(p.positive_ids.begin(), p.positive_ids.end());
  return out;
}

std::size_t first_gold_rank(const SearchResult& result, const GoldSet& golds) {
  for (std::size_t i = 0; i < result.entries.size(); ++i)
    if (golds.count(result.entries[i].passage_id)) return i + 1;
  return 0;
}

double recall_at_k(std::span<const SearchResult> results,
                   std::span<const GoldSet> golds, std::size_t k) {
  check_aligned(results.size(), golds.size());
  std::size_t hits = 0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    const std::size_t r = first_gold_rank(results[q], golds[q]);
    if (r != 0 && r <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double mrr_at_10(std::span<const SearchResult> results,
                 std::span<const GoldSet> golds) {
  check_aligned(results.size(), golds.size());
  double total = 0.0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    const std::size_t r = first_gold_rank(results[q], golds[q]);
    if (r != 0 && r <= 10) total += 1.0 / static_cast<double>(r);
  }
  return total / static_cast<double>(results.size());
}

double ndcg_at_10(std::span<const std::string> ranked,
                  const std::map<std::string, int>& relevance) {
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranked.size() && i < 10; ++i) {
    auto it = relevance.find(ranked[i]);
    if (it != relevance.end()) dcg += it->second / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> ideal;
  for (const auto& [id, rel] : relevance) ideal.push_back(rel);
  std::sort(ideal.rbegin(), ideal.rend());
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal.size() && i < 10; ++i)
    idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

double ndcg_at_10(std::span<const SearchResult> results,
                  std::span<const std::string> query_ids, const Qrels& qrels) {
  check_aligned(results.size(), query_ids.size());
  double total = 0.0;
  std::vector<std::string> ranked;
  for (std::size_t q = 0; q < results.size(); ++q) {
    auto it = qrels.find(query_ids[q]);
    if (it == qrels.end()) continue;
    ranked.clear();
    for (const auto& e : results[q].entries) ranked.push_back(e.passage_id);
    total += ndcg_at_10(ranked, it->second);
  }
  return total / static_cast<double>(results.size());
}

double recall_vs_exact(std::span<const SearchResult> approximate,
                       std::span<const SearchResult> exact, std::size_t k) {
  check_aligned(approximate.size(), exact.size());
  double total = 0.0;
  for (std::size_t q = 0; q < exact.size(); ++q) {
    const std::size_t n = std::min(k, exact[q].entries.size());
    if (n == 0) {
      total += 1.0;
      continue;
    }
    std::set<std::size_t> want;
    for (std::size_t i = 0; i < n; ++i) want.insert(exact[q].entries[i].row);
    std::size_t found = 0;
    for (std::size_t i = 0; i < approximate[q].entries.size() && i < k; ++i)
      found += want.count(approximate[q].entries[i].row);
    total += static_cast<double>(found) / static_cast<double>(n);
  }
  return total / static_cast<double>(exact.size());
}

double DevMetric::evaluate(std::span<const SearchResult> results,
                           std::span<const GoldSet> golds) const {
  return kind == MetricKind::kMrr10 ? mrr_at_10(results, golds)
                                    : recall_at_k(results, golds, k);
}

std::string DevMetric::name() const {
  return kind == MetricKind::kMrr10 ? "MRR@10" : "R@" + std::to_string(k);
}

DevMetric DevMetric::parse(const std::string& text) {
  std::string t;
  for (char c : text) t += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const auto at = t.find('@');
  if (at == std::string::npos) throw ArgumentError("bad metric \"" + text + "\"");
  const std::string head = t.substr(0, at);
  std::size_t k = 0;
  try {
    k = static_cast<std::size_t>(std::stoul(t.substr(at + 1)));
  } catch (const std::exception&) {
    throw ArgumentError("bad metric \"" + text + "\"");
  }
  if (head == "MRR" && k == 10) return {MetricKind::kMrr10, 10};
  if ((head == "R" || head == "RECALL") && k >= 1) return {MetricKind::kRecall, k};
  throw ArgumentError("bad metric \"" + text + "\"");
}

}  // namespace drboost
