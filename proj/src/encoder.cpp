#include "drboost/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "drboost/binary_io.hpp"
#include "drboost/common.hpp"

namespace drboost {

namespace {
constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint32_t kFlagLayerNorm = 1u;
}  // namespace

void EncoderModel::validate() const {
  featurizer.validate();
  if (dim < 1) throw ValidationError("encoder dim must be >= 1");
  if (weights.size() != std::size_t{featurizer.num_buckets} * dim ||
      ln_gain.size() != dim || ln_bias.size() != dim)
    throw ValidationError("encoder parameter shapes do not match dim");
  if (!(ln_epsilon > 0.0f)) throw ValidationError("ln_epsilon must be positive");
  auto finite = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  if (!finite(weights) || !finite(ln_gain) || !finite(ln_bias))
    throw ValidationError("encoder parameters must be finite");
}

EncoderModel EncoderModel::zeros(const FeaturizerConfig& featurizer,
                                 std::uint32_t dim) {
  featurizer.validate();
  if (dim < 1) throw ArgumentError("encoder dim must be >= 1");
  EncoderModel m;
  m.featurizer = featurizer;
  m.dim = dim;
  m.weights.assign(std::size_t{featurizer.num_buckets} * dim, 0.0f);
  m.ln_gain.assign(dim, 1.0f);
  m.ln_bias.assign(dim, 0.0f);
  return m;
}

EncoderModel EncoderModel::random(const FeaturizerConfig& featurizer,
                                  std::uint32_t dim, std::uint64_t seed) {
  EncoderModel m = zeros(featurizer, dim);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (float& w : m.weights) w = static_cast<float>(rng.uniform(-bound, bound));
  return m;
}

// ---------------------------------------------------------------------------

std::vector<double> layer_norm(std::span<const double> z,
                               std::span<const float> gain,
                               std::span<const float> bias, double epsilon) {
  const std::size_t d = z.size();
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);
  const double inv = 1.0 / std::sqrt(var + epsilon);
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i)
    out[i] = gain[i] * (z[i] - mean) * inv + bias[i];
  return out;
}

Activation forward(const EncoderModel& model, const SparseFeatures& features) {
  const std::size_t d = model.dim;
  Activation act;
  act.pre.assign(d, 0.0);
  for (std::size_t k = 0; k < features.nnz(); ++k) {
    const auto row = model.weight_row(features.indices[k]);
    const double x = features.values[k];
    for (std::size_t j = 0; j < d; ++j) act.pre[j] += x * row[j];
  }
  act.output.resize(d);
  if (!model.layer_norm) {
    act.normalized = act.pre;
    act.inv_std = 1.0;
    for (std::size_t j = 0; j < d; ++j) act.output[j] = act.pre[j] + model.ln_bias[j];
    return act;
  }
  double mean = 0.0;
  for (double v : act.pre) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : act.pre) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);
  act.inv_std = 1.0 / std::sqrt(var + static_cast<double>(model.ln_epsilon));
  act.normalized.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    act.normalized[j] = (act.pre[j] - mean) * act.inv_std;
    act.output[j] = model.ln_gain[j] * act.normalized[j] + model.ln_bias[j];
  }
  return act;
}

std::vector<float> embed_features(const EncoderModel& model,
                                  const SparseFeatures& features) {
  const auto act = forward(model, features);
  return std::vector<float>(act.output.begin(), act.output.end());
}

std::vector<float> embed(const EncoderModel& model, std::string_view text) {
  return embed_features(model, featurize(text, model.featurizer));
}

double score(const EncoderModel& model, std::string_view query,
             std::string_view passage) {
  return dot(embed(model, query), embed(model, passage));
}

EmbeddingMatrix embed_corpus(const EncoderModel& model, const Corpus& corpus) {
  EmbeddingMatrix m(corpus.size(), model.dim);
  parallel_for(corpus.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto v = embed(model, corpus[i].full_text());
      std::copy(v.begin(), v.end(), m.row(i).begin());
      m.row_ids[i] = corpus[i].id;
    }
  });
  return m;
}

// ---------------------------------------------------------------------------

double nll_loss(double positive, std::span<const double> negatives) {
  if (negatives.empty()) throw NumericError("nll_loss: no negatives");
  if (!std::isfinite(positive)) throw NumericError("nll_loss: non-finite score");
  double hi = positive;
  for (double s : negatives) {
    if (!std::isfinite(s)) throw NumericError("nll_loss: non-finite score");
    hi = std::max(hi, s);
  }
  double sum = std::exp(positive - hi);
  for (double s : negatives) sum += std::exp(s - hi);
  return -(positive - hi) + std::log(sum);
}

GradientBuffer::GradientBuffer(const EncoderModel& model)
    : dim_(model.dim),
      slot_of_(model.featurizer.num_buckets, -1),
      d_gain_(model.dim, 0.0),
      d_bias_(model.dim, 0.0) {}

void GradientBuffer::accumulate(const EncoderModel& model,
                                const SparseFeatures& features,
                                const Activation& act,
                                std::span<const double> d_output) {
  const std::size_t d = dim_;
  std::vector<double> d_pre(d);
  for (std::size_t j = 0; j < d; ++j) d_bias_[j] += d_output[j];
  if (model.layer_norm) {
    std::vector<double> d_norm(d);
    double mean_dn = 0.0, mean_dn_n = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      d_gain_[j] += d_output[j] * act.normalized[j];
      d_norm[j] = d_output[j] * model.ln_gain[j];
      mean_dn += d_norm[j];
      mean_dn_n += d_norm[j] * act.normalized[j];
    }
    mean_dn /= static_cast<double>(d);
    mean_dn_n /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j)
      d_pre[j] = act.inv_std * (d_norm[j] - mean_dn - act.normalized[j] * mean_dn_n);
  } else {
    std::copy(d_output.begin(), d_output.end(), d_pre.begin());
  }
  for (std::size_t k = 0; k < features.nnz(); ++k) {
    const std::uint32_t bucket = features.indices[k];
    std::int32_t slot = slot_of_[bucket];
    if (slot < 0) {
      slot = static_cast<std::int32_t>(touched_.size());
      slot_of_[bucket] = slot;
      touched_.push_back(bucket);
      rows_.resize(rows_.size() + d, 0.0);
    }
    double* row = rows_.data() + static_cast<std::size_t>(slot) * d;
    const double x = features.values[k];
    for (std::size_t j = 0; j < d; ++j) row[j] += x * d_pre[j];
  }
}

void GradientBuffer::clear() {
  for (std::uint32_t b : touched_) slot_of_[b] = -1;
  touched_.clear();
  rows_.clear();
  std::fill(d_gain_.begin(), d_gain_.end(), 0.0);
  std::fill(d_bias_.begin(), d_bias_.end(), 0.0);
}

void GradientBuffer::scale(double factor) {
  for (double& v : rows_) v *= factor;
  for (double& v : d_gain_) v *= factor;
  for (double& v : d_bias_) v *= factor;
}

double GradientBuffer::squared_norm() const {
  double s = 0.0;
  for (double v : rows_) s += v * v;
  for (double v : d_gain_) s += v * v;
  for (double v : d_bias_) s += v * v;
  return s;
}

std::vector<double> GradientBuffer::dense() const {
  const std::size_t weights = slot_of_.size() * dim_;
  std::vector<double> out(weights + 2 * dim_, 0.0);
  for (std::size_t s = 0; s < touched_.size(); ++s) {
    const auto r = row(s);
    std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(touched_[s] * dim_));
  }
  std::copy(d_gain_.begin(), d_gain_.end(), out.begin() + static_cast<std::ptrdiff_t>(weights));
  std::copy(d_bias_.begin(), d_bias_.end(),
            out.begin() + static_cast<std::ptrdiff_t>(weights + dim_));
  return out;
}

namespace {

double dot_d(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Loss and gradient for one query against candidate activations, where
// candidate 0 is the positive.
double softmax_nll(const EncoderModel& model, const SparseFeatures& query,
                   const Activation& q_act,
                   std::span<const SparseFeatures* const> cand_features,
                   std::span<const Activation* const> cand_acts,
                   GradientBuffer* grad) {
  const std::size_t n = cand_acts.size();
  std::vector<double> scores(n);
  for (std::size_t j = 0; j < n; ++j) scores[j] = dot_d(q_act.output, cand_acts[j]->output);
  const double loss =
      nll_loss(scores[0], std::span<const double>(scores).subspan(1));
  if (grad == nullptr) return loss;

  const double hi = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  std::vector<double> p(n);
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = std::exp(scores[j] - hi);
    z += p[j];
  }
  for (double& v : p) v /= z;
  p[0] -= 1.0;  // d loss / d score_j

  const std::size_t d = model.dim;
  std::vector<double> d_query(d, 0.0), d_cand(d);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      d_query[k] += p[j] * cand_acts[j]->output[k];
      d_cand[k] = p[j] * q_act.output[k];
    }
    grad->accumulate(model, *cand_features[j], *cand_acts[j], d_cand);
  }
  grad->accumulate(model, query, q_act, d_query);
  return loss;
}

// Training examples with ids resolved to featurized corpus rows.
struct ResolvedExample {
  SparseFeatures query;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

struct ResolvedSet {
  std::vector<ResolvedExample> examples;
  std::unordered_map<std::size_t, SparseFeatures> passages;

  const SparseFeatures& passage(std::size_t row) const { return passages.at(row); }
  std::size_t positive(std::size_t i, int epoch) const {
    const auto& pos = examples[i].positives;
    return pos[static_cast<std::size_t>(epoch) % pos.size()];
  }
};

ResolvedSet resolve(const std::vector<AugmentedExample>& examples,
                    const Corpus& corpus, const FeaturizerConfig& featurizer,
                    int negatives_cap) {
  ResolvedSet set;
  set.examples.reserve(examples.size());
  std::vector<std::size_t> needed;
  for (const auto& ex : examples) {
    ResolvedExample r;
    r.query = featurize(ex.pair().query_text, featurizer);
    for (const auto& id : ex.pair().positive_ids) r.positives.push_back(corpus.row_of(id));
    for (const auto& id : ex.negative_ids()) {
      if (negatives_cap > 0 && r.negatives.size() >= static_cast<std::size_t>(negatives_cap))
        break;
      r.negatives.push_back(corpus.row_of(id));
    }
    needed.insert(needed.end(), r.positives.begin(), r.positives.end());
    needed.insert(needed.end(), r.negatives.begin(), r.negatives.end());
    set.examples.push_back(std::move(r));
  }
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  std::vector<SparseFeatures> feats(needed.size());
  parallel_for(needed.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      feats[i] = featurize(corpus[needed[i]].full_text(), featurizer);
  });
  for (std::size_t i = 0; i < needed.size(); ++i)
    set.passages.emplace(needed[i], std::move(feats[i]));
  return set;
}

// Sum of example losses over one batch; adds gradients when grad != nullptr.
double batch_loss(const EncoderModel& model, const ResolvedSet& set,
                  std::span<const std::size_t> batch, int epoch, bool in_batch,
                  GradientBuffer* grad) {
  std::vector<std::size_t> batch_pos(batch.size());
  std::unordered_map<std::size_t, Activation> acts;
  auto act_of = [&](std::size_t row) -> const Activation& {
    auto it = acts.find(row);
    if (it == acts.end()) it = acts.emplace(row, forward(model, set.passage(row))).first;
    return it->second;
  };
  for (std::size_t b = 0; b < batch.size(); ++b) batch_pos[b] = set.positive(batch[b], epoch);

  double total = 0.0;
  std::vector<const SparseFeatures*> cand_f;
  std::vector<const Activation*> cand_a;
  std::vector<std::size_t> rows;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& ex = set.examples[batch[b]];
    rows.clear();
    rows.push_back(batch_pos[b]);
    for (std::size_t r : ex.negatives) rows.push_back(r);
    if (in_batch) {
      for (std::size_t o = 0; o < batch.size(); ++o) {
        if (o == b) continue;
        const std::size_t r = batch_pos[o];
        if (std::find(ex.positives.begin(), ex.positives.end(), r) != ex.positives.end())
          continue;
        if (std::find(rows.begin(), rows.end(), r) != rows.end()) continue;
        rows.push_back(r);
      }
    }
    if (rows.size() < 2)
      throw ArgumentError("example " + std::to_string(batch[b]) + " has no negatives");
    cand_f.clear();
    cand_a.clear();
    for (std::size_t r : rows) {
      cand_f.push_back(&set.passage(r));
      cand_a.push_back(&act_of(r));
    }
    const Activation q_act = forward(model, ex.query);
    total += softmax_nll(model, ex.query, q_act, cand_f, cand_a, grad);
  }
  return total;
}

double mean_nll_resolved(const EncoderModel& model, const ResolvedSet& set,
                         const TrainConfig& config, int epoch) {
  const std::size_t n = set.examples.size();
  if (n == 0) return 0.0;
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const std::size_t num_batches = (n + bs - 1) / bs;
  std::vector<double> partial(num_batches, 0.0);
  parallel_for(num_batches, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t start = b * bs;
      const std::size_t len = std::min(bs, n - start);
      partial[b] = batch_loss(model, set,
                              std::span<const std::size_t>(order).subspan(start, len),
                              epoch, config.in_batch_negatives, nullptr);
    }
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total / static_cast<double>(n);
}

}  // namespace

double nll_example(const EncoderModel& model, const SparseFeatures& query,
                   std::span<const SparseFeatures> candidates,
                   GradientBuffer* grad) {
  if (candidates.size() < 2) throw ArgumentError("nll_example: need a negative");
  std::vector<Activation> acts;
  acts.reserve(candidates.size());
  for (const auto& c : candidates) acts.push_back(forward(model, c));
  std::vector<const SparseFeatures*> cf;
  std::vector<const Activation*> ca;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cf.push_back(&candidates[i]);
    ca.push_back(&acts[i]);
  }
  const Activation q_act = forward(model, query);
  return softmax_nll(model, query, q_act, cf, ca, grad);
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
    throw ArgumentError("adam betas must lie in (0, 1)");
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (negatives_per_example < 0) throw ArgumentError("negatives_per_example must be >= 0");
  if (grad_clip && !(*grad_clip > 0.0)) throw ArgumentError("grad_clip must be positive");
}

AdamOptimizer::AdamOptimizer(const EncoderModel& model, const TrainConfig& config)
    : config_(config),
      m_(model.weights.size(), 0.0f),
      v_(model.weights.size(), 0.0f),
      m_gain_(model.dim, 0.0),
      v_gain_(model.dim, 0.0),
      m_bias_(model.dim, 0.0),
      v_bias_(model.dim, 0.0) {}

void AdamOptimizer::step(EncoderModel& model, const GradientBuffer& grad) {
  ++t_;
  const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate, eps = config_.adam_epsilon;
  const std::size_t d = model.dim;

  const auto& rows = grad.touched_rows();
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const auto g = grad.row(s);
    const std::size_t base = std::size_t{rows[s]} * d;
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t i = base + j;
      const double m = b1 * m_[i] + (1.0 - b1) * g[j];
      const double v = b2 * v_[i] + (1.0 - b2) * g[j] * g[j];
      m_[i] = static_cast<float>(m);
      v_[i] = static_cast<float>(v);
      model.weights[i] -= static_cast<float>(lr * (m / c1) / (std::sqrt(v / c2) + eps));
    }
  }
  auto dense = [&](std::vector<float>& param, const std::vector<double>& g,
                   std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t j = 0; j < d; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      param[j] -= static_cast<float>(lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps));
    }
  };
  if (model.layer_norm) dense(model.ln_gain, grad.d_gain(), m_gain_, v_gain_);
  dense(model.ln_bias, grad.d_bias(), m_bias_, v_bias_);
}

double TrainResult::train_nll() const {
  return epochs.at(static_cast<std::size_t>(best_epoch)).train_nll;
}

double mean_nll(const EncoderModel& model,
                const std::vector<AugmentedExample>& examples,
                const Corpus& corpus, const TrainConfig& config, int epoch) {
  const auto set = resolve(examples, corpus, model.featurizer, config.negatives_per_example);
  return mean_nll_resolved(model, set, config, epoch);
}

TrainResult train(const std::vector<AugmentedExample>& train_examples,
                  const std::vector<AugmentedExample>& dev_examples,
                  const Corpus& corpus, const FeaturizerConfig& featurizer,
                  std::uint32_t dim, const TrainConfig& config,
                  std::uint64_t init_seed) {
  config.validate();
  if (train_examples.empty()) throw ArgumentError("train: empty training set");

  TrainResult result;
  result.model = EncoderModel::random(featurizer, dim, init_seed);
  EncoderModel& model = result.model;

  const auto train_set = resolve(train_examples, corpus, featurizer, config.negatives_per_example);
  const auto dev_set = resolve(dev_examples, corpus, featurizer, config.negatives_per_example);
  const bool has_dev = !dev_set.examples.empty();

  EpochStats init{0, mean_nll_resolved(model, train_set, config, 0),
                  has_dev ? mean_nll_resolved(model, dev_set, config, 0) : 0.0};
  result.epochs.push_back(init);
  if (config.epochs == 0) return result;

  EncoderModel best = model;
  double best_dev = init.dev_nll;

  AdamOptimizer adam(model, config);
  GradientBuffer grad(model);
  const std::size_t n = train_set.examples.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t len = std::min(bs, n - start);
      grad.clear();
      const double loss =
          batch_loss(model, train_set, std::span<const std::size_t>(order).subspan(start, len),
                     epoch - 1, config.in_batch_negatives, &grad);
      if (!std::isfinite(loss))
        throw TrainingError("non-finite loss at step " + std::to_string(adam.steps() + 1));
      epoch_loss += loss;
      grad.scale(1.0 / static_cast<double>(len));
      if (config.grad_clip) {
        const double gn = std::sqrt(grad.squared_norm());
        if (gn > *config.grad_clip) grad.scale(*config.grad_clip / gn);
      }
      adam.step(model, grad);
    }
    EpochStats stats{epoch, epoch_loss / static_cast<double>(n),
                     has_dev ? mean_nll_resolved(model, dev_set, config, 0) : 0.0};
    if (!std::isfinite(stats.dev_nll))
      throw TrainingError("non-finite dev loss after epoch " + std::to_string(epoch));
    result.epochs.push_back(stats);
    if (!has_dev || stats.dev_nll < best_dev) {
      best_dev = stats.dev_nll;
      best = model;
      result.best_epoch = epoch;
    }
  }
  model = std::move(best);
  return result;
}

// ---------------------------------------------------------------------------

void write_model(BinaryWriter& out, const EncoderModel& model) {
  out.magic("DRBM");
  out.u32(kModelVersion);
  out.u32(model.layer_norm ? kFlagLayerNorm : 0u);
  out.u32(model.featurizer.num_buckets);
  out.u8(model.featurizer.use_bigrams ? 1 : 0);
  out.u8(model.featurizer.lowercase ? 1 : 0);
  out.u64(model.featurizer.hash_seed);
  out.u32(model.dim);
  out.f32(model.ln_epsilon);
  out.f32s(model.weights);
  out.f32s(model.ln_gain);
  out.f32s(model.ln_bias);
}

EncoderModel read_model(BinaryReader& in) {
  in.expect_magic("DRBM");
  const std::uint32_t version = in.u32();
  if (version != kModelVersion)
    throw ParseError(in.source() + ": unsupported model version " + std::to_string(version));
  EncoderModel m;
  const std::uint32_t flags = in.u32();
  m.layer_norm = (flags & kFlagLayerNorm) != 0;
  m.featurizer.num_buckets = in.u32();
  m.featurizer.use_bigrams = in.u8() != 0;
  m.featurizer.lowercase = in.u8() != 0;
  m.featurizer.hash_seed = in.u64();
  m.dim = in.u32();
  m.ln_epsilon = in.f32();
  try {
    m.featurizer.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(in.source() + ": " + e.what());
  }
  if (m.dim == 0 || m.dim > (1u << 16)) throw ParseError(in.source() + ": bad dim");
  m.weights.resize(std::size_t{m.featurizer.num_buckets} * m.dim);
  m.ln_gain.resize(m.dim);
  m.ln_bias.resize(m.dim);
  in.f32s(m.weights);
  in.f32s(m.ln_gain);
  in.f32s(m.ln_bias);
  m.validate();
  return m;
}

void save_model(const std::string& path, const EncoderModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  BinaryWriter w(out);
  write_model(w, model);
  if (!out) throw IoError("write failed: " + path);
}

EncoderModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  BinaryReader r(in, path);
  return read_model(r);
}

}  // namespace drboost
