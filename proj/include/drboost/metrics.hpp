#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "drboost/data.hpp"
#include "drboost/index.hpp"

namespace drboost {

using GoldSet = std::set<std::string>;

/// Gold sets aligned with `pairs`.
std::vector<GoldSet> golds_of(const std::vector<TrainPair>& pairs);

/// 1-based rank of the first gold in `result`, or 0 when absent.
std::size_t first_gold_rank(const SearchResult& result, const GoldSet& golds);

/// Fraction of queries with at least one gold in the top k.
/// Throws ArgumentError on an empty query set or misaligned inputs.
double recall_at_k(std::span<const SearchResult> results,
                   std::span<const GoldSet> golds, std::size_t k);

/// Mean reciprocal rank of the first gold, truncated at rank 10.
double mrr_at_10(std::span<const SearchResult> results,
                 std::span<const GoldSet> golds);

/// Linear-gain NDCG@10 with log2 discount; query_ids align with results.
/// Queries without judgements contribute 0.
double ndcg_at_10(std::span<const SearchResult> results,
                  std::span<const std::string> query_ids, const Qrels& qrels);

/// NDCG@10 for one ranked list of passage ids.
double ndcg_at_10(std::span<const std::string> ranked,
                  const std::map<std::string, int>& relevance);

/// Fraction of the exact top-k found in the approximate top-k, averaged.
double recall_vs_exact(std::span<const SearchResult> approximate,
                       std::span<const SearchResult> exact, std::size_t k);

enum class MetricKind { kRecall, kMrr10 };

struct DevMetric {
  MetricKind kind = MetricKind::kRecall;
  std::size_t k = 10;

  double evaluate(std::span<const SearchResult> results,
                  std::span<const GoldSet> golds) const;
  /// Search depth needed to evaluate the metric.
  std::size_t depth() const { return kind == MetricKind::kMrr10 ? 10 : k; }
  std::string name() const;
  /// Parses "R@10", "recall@20", "MRR@10".
  static DevMetric parse(const std::string& text);
};

}  // namespace drboost
