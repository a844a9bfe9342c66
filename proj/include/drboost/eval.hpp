#pragma once

#include <map>
#include <string>
#include <vector>

#include "drboost/boosting.hpp"
#include "drboost/index.hpp"
#include "drboost/metrics.hpp"

namespace drboost {

// ---------------------------------------------------------------------------
// Top-k margin

/// Mean L2 norm of the rows (mu_c).
double mean_row_norm(const EmbeddingMatrix& matrix);

/// (gold_score - kth-highest non-gold score) / (|query| * mu_c). `exact`
/// must hold at least k non-gold hits in rank order. Throws ArgumentError
/// when it does not and NumericError when |query| * mu_c is zero.
double topk_margin(double gold_score, std::span<const float> query,
                   const SearchResult& exact, const GoldSet& golds, std::size_t k,
                   double mu_c);

struct MarginSet {
  std::vector<double> values;             // one per query that succeeded
  std::vector<std::string> failed_queries;  // zero-norm queries
};

/// Margins of every pair under exact search over `passages`, using the first
/// positive as c+. Parallel over queries; output order follows `pairs`.
MarginSet training_margins(const EmbeddingMatrix& queries, const EmbeddingMatrix& passages,
                           const std::vector<TrainPair>& pairs, const Corpus& corpus,
                           std::size_t k);

/// Linear-interpolation quantile between closest ranks (q in [0, 1]).
double quantile(std::vector<double> values, double q);

struct MarginRow {
  int round = 0;
  double p50 = 0.0, p75 = 0.0, p90 = 0.0;
  std::size_t failed = 0;
};

/// One row per prefix ensemble (rounds 1..R) of `ensemble`.
std::vector<MarginRow> margin_quantiles(const Ensemble& ensemble,
                                        const std::vector<TrainPair>& pairs,
                                        const Corpus& corpus, std::size_t k = 20);

/// TSV: round<TAB>p50<TAB>p75<TAB>p90
void save_margin_table(const std::string& path, const std::vector<MarginRow>& rows);

// ---------------------------------------------------------------------------
// IVF probe sweep

struct ProbeRow {
  std::size_t n_probes = 0;
  double recall_at_k = 0.0;      // against golds
  double recall_vs_exact = 0.0;  // against exact search
};

/// 1, 2, 4, ... below k_lists, then k_lists.
std::vector<std::size_t> default_probe_list(std::size_t k_lists);

std::vector<ProbeRow> probe_sweep(const IVFIndex& ivf, const EmbeddingMatrix& matrix,
                                  const EmbeddingMatrix& queries,
                                  const std::vector<GoldSet>& golds, std::size_t k,
                                  const std::vector<std::size_t>& probes);

/// TSV: n_probes<TAB>recall_at_k<TAB>recall_vs_exact
void save_probe_table(const std::string& path, const std::vector<ProbeRow>& rows);

// ---------------------------------------------------------------------------
// Reports

struct QueryDetail {
  std::string query_id;
  std::size_t first_gold_rank = 0;  // 0 = not retrieved
  double top_score = 0.0;
};

struct EvalReport {
  std::map<std::string, double> metrics;  // "R@20", "MRR@10", "NDCG@10", ...
  std::vector<QueryDetail> queries;
  std::map<std::string, std::string> config;
};

/// R@K for each K in ks (each <= result depth), MRR@10, and NDCG@10 when
/// qrels is non-empty.
EvalReport evaluate_results(const std::vector<SearchResult>& results,
                            const std::vector<TrainPair>& pairs, const Qrels& qrels,
                            const std::vector<std::size_t>& ks);

/// "{dataset}.{model}.{index}.k{k}" with unsafe characters replaced by '_'.
std::string report_stem(const std::string& dataset, const std::string& model,
                        const std::string& index, std::size_t k);

std::string report_json(const EvalReport& report);
/// Writes {stem}.json (summary) and {stem}.tsv (per-query detail) in dir.
void save_report(const std::string& dir, const std::string& stem, const EvalReport& report);

}  // namespace drboost
