#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "drboost/common.hpp"
#include "drboost/data.hpp"
#include "drboost/embedding.hpp"
#include "drboost/encoder.hpp"
#include "drboost/index.hpp"
#include "drboost/metrics.hpp"

namespace drboost {

struct EnsembleComponent {
  EncoderModel model;
  float alpha = 1.0f;

  friend bool operator==(const EnsembleComponent&, const EnsembleComponent&) = default;
};

/// h(q, c) = sum_r alpha_r q_r . c_r, served as one inner product between
/// concatenated vectors. Component r occupies columns after components < r.
struct Ensemble {
  std::vector<EnsembleComponent> components;

  std::size_t size() const { return components.size(); }
  std::size_t total_dim() const;
  void append(EncoderModel model, float alpha = 1.0f);
  /// The first `rounds` components.
  Ensemble prefix(std::size_t rounds) const;
  /// Throws ValidationError when empty, on mixed featurizers, or non-finite alphas.
  void validate() const;

  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

enum class Side { kQuery, kPassage };

/// Concatenated representation. Passage sub-vectors are pre-scaled by alpha;
/// query sub-vectors are not.
std::vector<float> ensemble_embed(const Ensemble& ensemble, std::string_view text,
                                  Side side);
double ensemble_score(const Ensemble& ensemble, std::string_view query,
                      std::string_view passage);

/// Passage-side matrix for the whole corpus (row order = corpus order).
EmbeddingMatrix ensemble_embed_corpus(const Ensemble& ensemble, const Corpus& corpus);
/// Query-side vectors, one row per text.
EmbeddingMatrix embed_queries(const Ensemble& ensemble,
                              const std::vector<std::string>& texts);
EmbeddingMatrix embed_queries(const EncoderModel& model,
                              const std::vector<std::string>& texts);
/// Scales a component's passage matrix by alpha.
EmbeddingMatrix scaled(EmbeddingMatrix m, float alpha);

// ---------------------------------------------------------------------------
// Retrievers used to mine negatives

class Retriever {
 public:
  virtual ~Retriever() = default;
  /// Top-k over the whole corpus for every query text.
  virtual std::vector<SearchResult> retrieve(const std::vector<std::string>& queries,
                                             std::size_t k) const = 0;
};

/// Exact MIPS over a fixed passage matrix with ensemble query vectors.
class DenseRetriever : public Retriever {
 public:
  DenseRetriever(const Ensemble& ensemble, const EmbeddingMatrix& passages)
      : ensemble_(ensemble), passages_(passages) {}
  std::vector<SearchResult> retrieve(const std::vector<std::string>& queries,
                                     std::size_t k) const override;

 private:
  const Ensemble& ensemble_;
  const EmbeddingMatrix& passages_;
};

/// Term-overlap scorer over hashed unigram buckets: sum of idf^2 over buckets
/// shared by query and passage, idf = ln(N / df). Stands in for BM25 when
/// producing the first round of hard negatives.
class LexicalRetriever : public Retriever {
 public:
  LexicalRetriever(const Corpus& corpus, FeaturizerConfig featurizer);
  std::vector<SearchResult> retrieve(const std::vector<std::string>& queries,
                                     std::size_t k) const override;
  double idf(std::uint32_t bucket) const;

 private:
  FeaturizerConfig featurizer_;
  std::size_t num_rows_;
  std::vector<std::string> row_ids_;
  std::vector<std::vector<std::uint32_t>> postings_;  // bucket -> rows
};

// ---------------------------------------------------------------------------
// Negatives

enum class BoostMode { kBoost, kIterative, kBagging };
const char* boost_mode_name(BoostMode mode);
BoostMode parse_boost_mode(const std::string& name);

struct BoostConfig {
  FeaturizerConfig featurizer;
  int max_rounds = 5;
  double tolerance = 0.001;
  std::uint32_t dim_per_round = 32;
  int negatives_n = 8;
  int mine_top_n = 100;
  double mine_temperature = 1.0;
  DevMetric dev_metric{MetricKind::kRecall, 10};
  BoostMode mode = BoostMode::kBoost;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Draws `n` distinct indices from softmax(scores / temperature) by
/// sequential renormalisation. n must not exceed scores.size().
std::vector<std::size_t> sample_without_replacement(std::span<const double> scores,
                                                    std::size_t n,
                                                    double temperature, Rng& rng);

/// For each pair: top mine_top_n by the retriever, positives removed, then
/// negatives_n samples without replacement from softmax(score / T). Short
/// pools are padded with uniform corpus samples.
std::vector<AugmentedExample> mine_negatives(const Retriever& retriever,
                                             const std::vector<TrainPair>& pairs,
                                             const Corpus& corpus,
                                             const BoostConfig& config,
                                             std::uint64_t seed);

/// n uniform corpus passages per pair, excluding positives, no repeats.
std::vector<AugmentedExample> initial_negatives(const std::vector<TrainPair>& pairs,
                                                const Corpus& corpus, int n,
                                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Drivers

struct RoundRecord {
  int round = 0;
  double dev_metric = 0.0;
  double train_nll = 0.0;
};

struct BoostResult {
  Ensemble ensemble;  // best dev round (a prefix for boost)
  std::vector<RoundRecord> history;
  int best_round = 0;
  /// Every trained round, before model selection (boost: the full
  /// ensemble; iterative: all replaced models).
  std::vector<EncoderModel> round_models;
};

/// Dev metric of an ensemble under exact search.
double evaluate_dev(const Ensemble& ensemble, const EmbeddingMatrix& passages,
                    const std::vector<TrainPair>& dev, const DevMetric& metric);

/// Boosted dense retrieval: round 1 on random negatives; round r > 1 on
/// negatives mined from the current ensemble; each new weak learner is
/// appended with alpha = 1. Stops when the dev-error reduction is <= tolerance
/// or after max_rounds. Hard negatives only (in-batch negatives are disabled).
BoostResult run_boosting(const std::vector<TrainPair>& train,
                         const std::vector<TrainPair>& dev, const Corpus& corpus,
                         const BoostConfig& boost_cfg, TrainConfig train_cfg);

/// Iteratively-sampled negatives baseline: the same loop, but each round
/// trains a dim_per_round-wide model that replaces the previous one. Round 1
/// negatives come from LexicalRetriever; in-batch negatives are enabled.
BoostResult run_iterative(const std::vector<TrainPair>& train,
                          const std::vector<TrainPair>& dev, const Corpus& corpus,
                          const BoostConfig& boost_cfg, TrainConfig train_cfg);

/// max_rounds independent dim_per_round encoders (distinct seeds, lexical
/// round-1 negatives, in-batch negatives), concatenated with alpha = 1.
BoostResult run_bagging(const std::vector<TrainPair>& train,
                        const std::vector<TrainPair>& dev, const Corpus& corpus,
                        const BoostConfig& boost_cfg, TrainConfig train_cfg);

/// Dispatches on boost_cfg.mode.
BoostResult run_mode(const std::vector<TrainPair>& train,
                     const std::vector<TrainPair>& dev, const Corpus& corpus,
                     const BoostConfig& boost_cfg, const TrainConfig& train_cfg);

// ---------------------------------------------------------------------------
// Files. Ensemble: "DRBE", u32 version, u32 count, then (f32 alpha, DRBM
// model) per component. History TSV: round<TAB>dev_metric<TAB>train_nll.

void save_ensemble(const std::string& path, const Ensemble& ensemble);
Ensemble load_ensemble(const std::string& path);
void save_history(const std::string& path, const std::vector<RoundRecord>& history);

}  // namespace drboost
