#include "drboost/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "drboost/common.hpp"
#include "json.hpp"

namespace drboost {

double mean_row_norm(const EmbeddingMatrix& matrix) {
  if (matrix.num_rows == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < matrix.num_rows; ++i) total += norm(matrix.row(i));
  return total / static_cast<double>(matrix.num_rows);
}

double topk_margin(double gold_score, std::span<const float> query,
                   const SearchResult& exact, const GoldSet& golds, std::size_t k,
                   double mu_c) {
  if (k == 0) throw ArgumentError("topk_margin: k must be >= 1");
  std::size_t seen = 0;
  double kth = 0.0;
  for (const auto& hit : exact.entries) {
    if (golds.count(hit.passage_id)) continue;
    if (++seen == k) {
      kth = hit.score;
      break;
    }
  }
  if (seen < k) throw ArgumentError("topk_margin: fewer than k non-gold results");
  const double denom = norm(query) * mu_c;
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw NumericError("topk_margin: zero query or passage norm");
  return (gold_score - kth) / denom;
}

MarginSet training_margins(const EmbeddingMatrix& queries, const EmbeddingMatrix& passages,
                           const std::vector<TrainPair>& pairs, const Corpus& corpus,
                           std::size_t k) {
  if (queries.num_rows != pairs.size()) throw ArgumentError("margins: queries and pairs differ");
  const double mu_c = mean_row_norm(passages);
  std::size_t max_golds = 0;
  for (const auto& p : pairs) max_golds = std::max(max_golds, p.positive_ids.size());
  const auto exact = exact_search_all(passages, queries, k + max_golds);
  std::vector<double> values(pairs.size());
  std::vector<char> ok(pairs.size(), 0);
  parallel_for(pairs.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q) {
      const GoldSet golds(pairs[q].positive_ids.begin(), pairs[q].positive_ids.end());
      const std::size_t gold_row = corpus.row_of(pairs[q].positive_ids.front());
      const double gold = dot(queries.row(q), passages.row(gold_row));
      try {
        values[q] = topk_margin(gold, queries.row(q), exact[q], golds, k, mu_c);
        ok[q] = 1;
      } catch (const NumericError&) {
      }
    }
  });
  MarginSet out;
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    if (ok[q])
      out.values.push_back(values[q]);
    else
      out.failed_queries.push_back(pairs[q].query_id);
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<MarginRow> margin_quantiles(const Ensemble& ensemble,
                                        const std::vector<TrainPair>& pairs,
                                        const Corpus& corpus, std::size_t k) {
  ensemble.validate();
  std::vector<std::string> texts;
  for (const auto& p : pairs) texts.push_back(p.query_text);
  std::vector<EmbeddingMatrix> q_parts, p_parts;
  std::vector<MarginRow> rows;
  for (std::size_t r = 0; r < ensemble.size(); ++r) {
    const auto& c = ensemble.components[r];
    q_parts.push_back(embed_queries(c.model, texts));
    p_parts.push_back(scaled(embed_corpus(c.model, corpus), c.alpha));
    std::vector<const EmbeddingMatrix*> qp, pp;
    for (std::size_t i = 0; i <= r; ++i) {
      qp.push_back(&q_parts[i]);
      pp.push_back(&p_parts[i]);
    }
    const auto margins = training_margins(concat_columns(qp), concat_columns(pp), pairs, corpus, k);
    MarginRow row;
    row.round = static_cast<int>(r + 1);
    row.failed = margins.failed_queries.size();
    if (!margins.values.empty()) {
      row.p50 = quantile(margins.values, 0.50);
      row.p75 = quantile(margins.values, 0.75);
      row.p90 = quantile(margins.values, 0.90);
    }
    if (row.failed > 0)
      log_info("margins round " + std::to_string(row.round) + ": " +
               std::to_string(row.failed) + " queries with zero norm skipped");
    rows.push_back(row);
  }
  return rows;
}

void save_margin_table(const std::string& path, const std::vector<MarginRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.precision(9);
  for (const auto& r : rows) out << r.round << '\t' << r.p50 << '\t' << r.p75 << '\t' << r.p90 << '\n';
}

std::vector<std::size_t> default_probe_list(std::size_t k_lists) {
  std::vector<std::size_t> out;
  for (std::size_t p = 1; p < k_lists; p *= 2) out.push_back(p);
  out.push_back(k_lists);
  return out;
}

std::vector<ProbeRow> probe_sweep(const IVFIndex& ivf, const EmbeddingMatrix& matrix,
                                  const EmbeddingMatrix& queries,
                                  const std::vector<GoldSet>& golds, std::size_t k,
                                  const std::vector<std::size_t>& probes) {
  const auto exact = exact_search_all(matrix, queries, k);
  std::vector<ProbeRow> rows;
  for (std::size_t n_probes : probes) {
    std::vector<SearchResult> approx(queries.num_rows);
    parallel_for(queries.num_rows, [&](std::size_t b, std::size_t e) {
      for (std::size_t q = b; q < e; ++q)
        approx[q] = ivf_search(ivf, matrix, queries.row(q), k, n_probes);
    });
    rows.push_back({n_probes, recall_at_k(approx, golds, k), recall_vs_exact(approx, exact, k)});
  }
  return rows;
}

void save_probe_table(const std::string& path, const std::vector<ProbeRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.precision(9);
  for (const auto& r : rows)
    out << r.n_probes << '\t' << r.recall_at_k << '\t' << r.recall_vs_exact << '\n';
}

EvalReport evaluate_results(const std::vector<SearchResult>& results,
                            const std::vector<TrainPair>& pairs, const Qrels& qrels,
                            const std::vector<std::size_t>& ks) {
  const auto golds = golds_of(pairs);
  EvalReport report;
  for (std::size_t k : ks) report.metrics["R@" + std::to_string(k)] = recall_at_k(results, golds, k);
  report.metrics["MRR@10"] = mrr_at_10(results, golds);
  if (!qrels.empty()) {
    std::vector<std::string> ids;
    for (const auto& p : pairs) ids.push_back(p.query_id);
    report.metrics["NDCG@10"] = ndcg_at_10(results, ids, qrels);
  }
  for (std::size_t q = 0; q < pairs.size(); ++q)
    report.queries.push_back({pairs[q].query_id, first_gold_rank(results[q], golds[q]),
                              results[q].entries.empty() ? 0.0 : results[q].entries[0].score});
  return report;
}

std::string report_stem(const std::string& dataset, const std::string& model,
                        const std::string& index, std::size_t k) {
  auto clean = [](std::string s) {
    for (char& c : s)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return s;
  };
  return clean(dataset) + "." + clean(model) + "." + clean(index) + ".k" + std::to_string(k);
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : report.metrics) j["metrics"][name] = value;
  j["num_queries"] = report.queries.size();
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.config) j["config"][key] = value;
  return j.dump(2);
}

void save_report(const std::string& dir, const std::string& stem, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  {
    std::ofstream out(root / (stem + ".json"), std::ios::binary);
    if (!out) throw IoError("cannot write report in " + dir);
    out << report_json(report) << '\n';
  }
  std::ofstream out(root / (stem + ".tsv"), std::ios::binary);
  if (!out) throw IoError("cannot write report in " + dir);
  out.precision(9);
  out << "query_id\tfirst_gold_rank\ttop_score\n";
  for (const auto& q : report.queries)
    out << q.query_id << '\t' << q.first_gold_rank << '\t' << q.top_score << '\n';
}

}  // namespace drboost
