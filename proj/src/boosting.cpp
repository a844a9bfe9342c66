#include "drboost/boosting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "drboost/binary_io.hpp"

namespace drboost {

namespace {
constexpr std::uint32_t kEnsembleVersion = 1;
}

std::size_t Ensemble::total_dim() const {
  std::size_t d = 0;
  for (const auto& c : components) d += c.model.dim;
  return d;
}

void Ensemble::append(EncoderModel model, float alpha) {
  components.push_back({std::move(model), alpha});
}

Ensemble Ensemble::prefix(std::size_t rounds) const {
  if (rounds > components.size()) throw ArgumentError("prefix longer than ensemble");
  Ensemble e;
  e.components.assign(components.begin(),
                      components.begin() + static_cast<std::ptrdiff_t>(rounds));
  return e;
}

void Ensemble::validate() const {
  if (components.empty()) throw ValidationError("ensemble has no components");
  for (const auto& c : components) {
    if (!std::isfinite(c.alpha)) throw ValidationError("ensemble alpha must be finite");
    if (!(c.model.featurizer == components.front().model.featurizer))
      throw ValidationError("ensemble components use different featurizers");
    c.model.validate();
  }
}

std::vector<float> ensemble_embed(const Ensemble& ensemble, std::string_view text,
                                  Side side) {
  std::vector<float> out;
  out.reserve(ensemble.total_dim());
  std::optional<SparseFeatures> shared;
  for (const auto& c : ensemble.components) {
    if (!shared || !(c.model.featurizer == ensemble.components.front().model.featurizer))
      shared = featurize(text, c.model.featurizer);
    const auto v = embed_features(c.model, *shared);
    for (float x : v) out.push_back(side == Side::kPassage ? c.alpha * x : x);
  }
  return out;
}

double ensemble_score(const Ensemble& ensemble, std::string_view query,
                      std::string_view passage) {
  return dot(ensemble_embed(ensemble, query, Side::kQuery),
             ensemble_embed(ensemble, passage, Side::kPassage));
}

EmbeddingMatrix scaled(EmbeddingMatrix m, float alpha) {
  if (alpha != 1.0f)
    for (float& v : m.data) v *= alpha;
  return m;
}

EmbeddingMatrix ensemble_embed_corpus(const Ensemble& ensemble, const Corpus& corpus) {
  std::vector<EmbeddingMatrix> parts;
  parts.reserve(ensemble.size());
  for (const auto& c : ensemble.components)
    parts.push_back(scaled(embed_corpus(c.model, corpus), c.alpha));
  std::vector<const EmbeddingMatrix*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  if (ptrs.empty()) {
    EmbeddingMatrix empty(corpus.size(), 0);
    for (std::size_t i = 0; i < corpus.size(); ++i) empty.row_ids[i] = corpus[i].id;
    return empty;
  }
  return concat_columns(ptrs);
}

EmbeddingMatrix embed_queries(const Ensemble& ensemble,
                              const std::vector<std::string>& texts) {
  EmbeddingMatrix m(texts.size(), ensemble.total_dim());
  parallel_for(texts.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto v = ensemble_embed(ensemble, texts[i], Side::kQuery);
      std::copy(v.begin(), v.end(), m.row(i).begin());
    }
  });
  return m;
}

EmbeddingMatrix embed_queries(const EncoderModel& model,
                              const std::vector<std::string>& texts) {
  EmbeddingMatrix m(texts.size(), model.dim);
  parallel_for(texts.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto v = embed(model, texts[i]);
      std::copy(v.begin(), v.end(), m.row(i).begin());
    }
  });
  return m;
}

// ---------------------------------------------------------------------------

std::vector<SearchResult> DenseRetriever::retrieve(const std::vector<std::string>& queries,
                                                   std::size_t k) const {
  return exact_search_all(passages_, embed_queries(ensemble_, queries), k);
}

LexicalRetriever::LexicalRetriever(const Corpus& corpus, FeaturizerConfig featurizer)
    : featurizer_(featurizer), num_rows_(corpus.size()) {
  featurizer_.use_bigrams = false;
  featurizer_.validate();
  postings_.resize(featurizer_.num_buckets);
  row_ids_.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    row_ids_.push_back(corpus[i].id);
    const auto f = featurize(corpus[i].full_text(), featurizer_);
    for (std::uint32_t b : f.indices) postings_[b].push_back(static_cast<std::uint32_t>(i));
  }
}

double LexicalRetriever::idf(std::uint32_t bucket) const {
  const std::size_t df = postings_[bucket].size();
  if (df == 0) return 0.0;
  return std::log(static_cast<double>(num_rows_) / static_cast<double>(df));
}

std::vector<SearchResult> LexicalRetriever::retrieve(const std::vector<std::string>& queries,
                                                     std::size_t k) const {
  std::vector<SearchResult> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t b, std::size_t e) {
    std::vector<double> scores(num_rows_);
    for (std::size_t q = b; q < e; ++q) {
      std::fill(scores.begin(), scores.end(), 0.0);
      const auto f = featurize(queries[q], featurizer_);
      for (std::uint32_t bucket : f.indices) {
        const double w = idf(bucket);
        for (std::uint32_t row : postings_[bucket]) scores[row] += w * w;
      }
      std::vector<std::pair<double, std::size_t>> cands(num_rows_);
      for (std::size_t i = 0; i < num_rows_; ++i) cands[i] = {scores[i], i};
      out[q] = top_k(std::move(cands), k, row_ids_);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

const char* boost_mode_name(BoostMode mode) {
  switch (mode) {
    case BoostMode::kBoost: return "boost";
    case BoostMode::kIterative: return "iterative";
    case BoostMode::kBagging: return "bagging";
  }
  return "unknown";
}

BoostMode parse_boost_mode(const std::string& name) {
  if (name == "boost") return BoostMode::kBoost;
  if (name == "iterative") return BoostMode::kIterative;
  if (name == "bagging") return BoostMode::kBagging;
  throw ArgumentError("unknown mode \"" + name + "\"");
}

void BoostConfig::validate() const {
  featurizer.validate();
  if (max_rounds < 1) throw ArgumentError("max_rounds must be >= 1");
  if (!(tolerance >= 0.0)) throw ArgumentError("tolerance must be >= 0");
  if (dim_per_round < 1) throw ArgumentError("dim_per_round must be >= 1");
  if (negatives_n < 1) throw ArgumentError("negatives_n must be >= 1");
  if (mine_top_n <= negatives_n) throw ArgumentError("mine_top_n must exceed negatives_n");
  if (!(mine_temperature > 0.0)) throw ArgumentError("mine_temperature must be positive");
}

std::vector<std::size_t> sample_without_replacement(std::span<const double> scores,
                                                    std::size_t n, double temperature,
                                                    Rng& rng) {
  if (n > scores.size()) throw ArgumentError("sample_without_replacement: n > pool");
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  std::vector<std::size_t> remaining(scores.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  std::vector<std::size_t> picked;
  std::vector<double> w;
  picked.reserve(n);
  while (picked.size() < n) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i : remaining) hi = std::max(hi, scores[i]);
    w.resize(remaining.size());
    double total = 0.0;
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      w[j] = std::exp((scores[remaining[j]] - hi) / temperature);
      total += w[j];
    }
    const double r = rng.uniform() * total;
    double acc = 0.0;
    std::size_t choice = remaining.size() - 1;
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      acc += w[j];
      if (acc > r && w[j] > 0.0) {
        choice = j;
        break;
      }
    }
    picked.push_back(remaining[choice]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(choice));
  }
  return picked;
}

namespace {

// Uniform corpus rows not in `exclude`, appended to `out` until it holds n.
void pad_uniform(const Corpus& corpus, std::set<std::size_t>& exclude,
                 std::vector<std::size_t>& out, std::size_t n, Rng& rng) {
  if (corpus.size() < exclude.size() + (n - out.size()))
    throw ArgumentError("corpus too small to draw " + std::to_string(n) + " negatives");
  while (out.size() < n) {
    const auto row = static_cast<std::size_t>(rng.below(corpus.size()));
    if (exclude.insert(row).second) out.push_back(row);
  }
}

}  // namespace

std::vector<AugmentedExample> mine_negatives(const Retriever& retriever,
                                             const std::vector<TrainPair>& pairs,
                                             const Corpus& corpus,
                                             const BoostConfig& config,
                                             std::uint64_t seed) {
  config.validate();
  std::vector<std::string> queries;
  queries.reserve(pairs.size());
  for (const auto& p : pairs) queries.push_back(p.query_text);
  const auto results = retriever.retrieve(queries, static_cast<std::size_t>(config.mine_top_n));

  const std::size_t n = static_cast<std::size_t>(config.negatives_n);
  std::vector<std::vector<std::string>> negatives(pairs.size());
  std::atomic<std::size_t> padded{0};
  parallel_for(pairs.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q) {
      Rng rng(mix_seed(seed, q));
      std::set<std::size_t> exclude;
      for (const auto& id : pairs[q].positive_ids) exclude.insert(corpus.row_of(id));
      std::vector<double> scores;
      std::vector<std::size_t> pool;
      for (const auto& hit : results[q].entries) {
        if (exclude.count(hit.row)) continue;
        pool.push_back(hit.row);
        scores.push_back(hit.score);
      }
      std::vector<std::size_t> rows;
      if (pool.size() >= n) {
        for (std::size_t j : sample_without_replacement(scores, n, config.mine_temperature, rng))
          rows.push_back(pool[j]);
      } else {
        rows = pool;
        exclude.insert(pool.begin(), pool.end());
        pad_uniform(corpus, exclude, rows, n, rng);
        padded.fetch_add(1);
      }
      for (std::size_t r : rows) negatives[q].push_back(corpus[r].id);
    }
  });
  if (padded.load() > 0)
    log_info("mine_negatives: padded " + std::to_string(padded.load()) +
             " queries with uniform negatives");
  std::vector<AugmentedExample> out;
  out.reserve(pairs.size());
  for (std::size_t q = 0; q < pairs.size(); ++q)
    out.push_back(make_augmented(pairs[q], std::move(negatives[q])));
  return out;
}

std::vector<AugmentedExample> initial_negatives(const std::vector<TrainPair>& pairs,
                                                const Corpus& corpus, int n,
                                                std::uint64_t seed) {
  if (n < 1) throw ArgumentError("initial_negatives: n must be >= 1");
  std::vector<AugmentedExample> out;
  out.reserve(pairs.size());
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    Rng rng(mix_seed(seed, q));
    std::set<std::size_t> exclude;
    for (const auto& id : pairs[q].positive_ids) exclude.insert(corpus.row_of(id));
    std::vector<std::size_t> rows;
    pad_uniform(corpus, exclude, rows, static_cast<std::size_t>(n), rng);
    std::vector<std::string> ids;
    for (std::size_t r : rows) ids.push_back(corpus[r].id);
    out.push_back(make_augmented(pairs[q], std::move(ids)));
  }
  return out;
}

// ---------------------------------------------------------------------------

double evaluate_dev(const Ensemble& ensemble, const EmbeddingMatrix& passages,
                    const std::vector<TrainPair>& dev, const DevMetric& metric) {
  std::vector<std::string> texts;
  for (const auto& p : dev) texts.push_back(p.query_text);
  const auto results = exact_search_all(passages, embed_queries(ensemble, texts), metric.depth());
  const auto golds = golds_of(dev);
  return metric.evaluate(results, golds);
}

namespace {

// Metric of h0, the constant scorer: every query ranks the corpus in row order.
double constant_dev_metric(const Corpus& corpus, const std::vector<TrainPair>& dev,
                           const DevMetric& metric) {
  SearchResult fixed;
  for (std::size_t i = 0; i < std::min(corpus.size(), metric.depth()); ++i)
    fixed.entries.push_back({i, corpus[i].id, 0.0});
  std::vector<SearchResult> results(dev.size(), fixed);
  return metric.evaluate(results, golds_of(dev));
}

enum class Variant { kCombine, kReplace };

BoostResult boosting_loop(const std::vector<TrainPair>& train,
                          const std::vector<TrainPair>& dev, const Corpus& corpus,
                          const BoostConfig& cfg, TrainConfig train_cfg,
                          Variant variant) {
  cfg.validate();
  if (dev.empty()) throw ArgumentError("boosting requires a non-empty dev set");
  if (train.empty()) throw ArgumentError("boosting requires a non-empty train set");

  BoostResult result;
  Ensemble current;
  std::vector<EmbeddingMatrix> parts;
  EmbeddingMatrix passages;
  std::unique_ptr<LexicalRetriever> lexical;
  if (variant == Variant::kReplace)
    lexical = std::make_unique<LexicalRetriever>(corpus, cfg.featurizer);

  double eps_old = std::numeric_limits<double>::infinity();
  double eps = 1.0 - constant_dev_metric(corpus, dev, cfg.dev_metric);
  double best_eps = std::numeric_limits<double>::infinity();
  Ensemble best;

  for (int r = 1; r <= cfg.max_rounds && (eps_old - eps) > cfg.tolerance; ++r) {
    const auto round = static_cast<std::uint64_t>(r);
    std::vector<AugmentedExample> train_ex, dev_ex;
    if (r == 1 && variant == Variant::kCombine) {
      train_ex = initial_negatives(train, corpus, cfg.negatives_n, mix_seed(cfg.seed, 100 + round));
      dev_ex = initial_negatives(dev, corpus, cfg.negatives_n, mix_seed(cfg.seed, 200 + round));
    } else {
      std::unique_ptr<DenseRetriever> dense;
      const Retriever* source = lexical.get();
      if (r > 1) {
        dense = std::make_unique<DenseRetriever>(current, passages);
        source = dense.get();
      }
      train_ex = mine_negatives(*source, train, corpus, cfg, mix_seed(cfg.seed, 100 + round));
      dev_ex = mine_negatives(*source, dev, corpus, cfg, mix_seed(cfg.seed, 200 + round));
    }

    train_cfg.seed = mix_seed(cfg.seed, 300 + round);
    auto trained = drboost::train(train_ex, dev_ex, corpus, cfg.featurizer, cfg.dim_per_round,
                         train_cfg, mix_seed(cfg.seed, 400 + round));
    result.round_models.push_back(trained.model);

    auto matrix = embed_corpus(trained.model, corpus);
    if (variant == Variant::kCombine) {
      current.append(std::move(trained.model), 1.0f);
      parts.push_back(std::move(matrix));
      std::vector<const EmbeddingMatrix*> ptrs;
      for (const auto& p : parts) ptrs.push_back(&p);
      passages = concat_columns(ptrs);
    } else {
      current = Ensemble{};
      current.append(std::move(trained.model), 1.0f);
      passages = std::move(matrix);
    }

    eps_old = eps;
    const double metric = evaluate_dev(current, passages, dev, cfg.dev_metric);
    eps = 1.0 - metric;
    result.history.push_back({r, metric, trained.train_nll()});
    log_info(std::string(variant == Variant::kCombine ? "boost" : "iterative") + " round " +
             std::to_string(r) + ": dev " + cfg.dev_metric.name() + " = " +
             std::to_string(metric) + ", train nll = " + std::to_string(trained.train_nll()));
    if (eps < best_eps) {
      best_eps = eps;
      best = current;
      result.best_round = r;
    }
  }
  result.ensemble = std::move(best);
  return result;
}

}  // namespace

BoostResult run_boosting(const std::vector<TrainPair>& train,
                         const std::vector<TrainPair>& dev, const Corpus& corpus,
                         const BoostConfig& boost_cfg, TrainConfig train_cfg) {
  train_cfg.in_batch_negatives = false;
  return boosting_loop(train, dev, corpus, boost_cfg, train_cfg, Variant::kCombine);
}

BoostResult run_iterative(const std::vector<TrainPair>& train,
                          const std::vector<TrainPair>& dev, const Corpus& corpus,
                          const BoostConfig& boost_cfg, TrainConfig train_cfg) {
  train_cfg.in_batch_negatives = true;
  return boosting_loop(train, dev, corpus, boost_cfg, train_cfg, Variant::kReplace);
}

BoostResult run_bagging(const std::vector<TrainPair>& train,
                        const std::vector<TrainPair>& dev, const Corpus& corpus,
                        const BoostConfig& cfg, TrainConfig train_cfg) {
  cfg.validate();
  if (dev.empty()) throw ArgumentError("bagging requires a non-empty dev set");
  train_cfg.in_batch_negatives = true;
  const LexicalRetriever lexical(corpus, cfg.featurizer);

  BoostResult result;
  std::vector<EmbeddingMatrix> parts;
  for (int m = 1; m <= cfg.max_rounds; ++m) {
    const auto member = static_cast<std::uint64_t>(m);
    const auto train_ex = mine_negatives(lexical, train, corpus, cfg, mix_seed(cfg.seed, 500 + member));
    const auto dev_ex = mine_negatives(lexical, dev, corpus, cfg, mix_seed(cfg.seed, 600 + member));
    train_cfg.seed = mix_seed(cfg.seed, 700 + member);
    auto trained = drboost::train(train_ex, dev_ex, corpus, cfg.featurizer, cfg.dim_per_round,
                         train_cfg, mix_seed(cfg.seed, 800 + member));
    result.round_models.push_back(trained.model);
    parts.push_back(embed_corpus(trained.model, corpus));
    result.ensemble.append(std::move(trained.model), 1.0f);

    std::vector<const EmbeddingMatrix*> ptrs;
    for (const auto& p : parts) ptrs.push_back(&p);
    const double metric = evaluate_dev(result.ensemble, concat_columns(ptrs), dev, cfg.dev_metric);
    result.history.push_back({m, metric, trained.train_nll()});
    log_info("bagging member " + std::to_string(m) + ": dev " + cfg.dev_metric.name() +
             " = " + std::to_string(metric));
  }
  result.best_round = cfg.max_rounds;
  return result;
}

BoostResult run_mode(const std::vector<TrainPair>& train,
                     const std::vector<TrainPair>& dev, const Corpus& corpus,
                     const BoostConfig& boost_cfg, const TrainConfig& train_cfg) {
  switch (boost_cfg.mode) {
    case BoostMode::kBoost: return run_boosting(train, dev, corpus, boost_cfg, train_cfg);
    case BoostMode::kIterative: return run_iterative(train, dev, corpus, boost_cfg, train_cfg);
    case BoostMode::kBagging: return run_bagging(train, dev, corpus, boost_cfg, train_cfg);
  }
  throw ArgumentError("bad mode");
}

// ---------------------------------------------------------------------------

void save_ensemble(const std::string& path, const Ensemble& ensemble) {
  ensemble.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  BinaryWriter w(out);
  w.magic("DRBE");
  w.u32(kEnsembleVersion);
  w.u32(static_cast<std::uint32_t>(ensemble.size()));
  for (const auto& c : ensemble.components) {
    w.f32(c.alpha);
    write_model(w, c.model);
  }
  if (!out) throw IoError("write failed: " + path);
}

Ensemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  BinaryReader r(in, path);
  r.expect_magic("DRBE");
  const std::uint32_t version = r.u32();
  if (version != kEnsembleVersion)
    throw ParseError(path + ": unsupported ensemble version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  if (count == 0 || count > 4096) throw ParseError(path + ": bad component count");
  Ensemble e;
  for (std::uint32_t i = 0; i < count; ++i) {
    const float alpha = r.f32();
    e.append(read_model(r), alpha);
  }
  e.validate();
  return e;
}

void save_history(const std::string& path, const std::vector<RoundRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.precision(9);
  for (const auto& h : history)
    out << h.round << '\t' << h.dev_metric << '\t' << h.train_nll << '\n';
}

}  // namespace drboost
