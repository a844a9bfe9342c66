#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drboost/data.hpp"
#include "drboost/embedding.hpp"
#include "drboost/featurizer.hpp"

namespace drboost {

class BinaryReader;
class BinaryWriter;

/// One weak learner: a linear projection of hashed term counts followed by
/// layer normalisation. Queries and passages share every parameter.
struct EncoderModel {
  FeaturizerConfig featurizer;
  std::uint32_t dim = 32;
  std::vector<float> weights;  // num_buckets x dim, row-major
  std::vector<float> ln_gain;
  std::vector<float> ln_bias;
  float ln_epsilon = 1e-5f;
  // When false the output is the raw projection plus ln_bias (distilled
  // query encoders).
  bool layer_norm = true;

  std::span<float> weight_row(std::uint32_t bucket) {
    return {weights.data() + std::size_t{bucket} * dim, dim};
  }
  std::span<const float> weight_row(std::uint32_t bucket) const {
    return {weights.data() + std::size_t{bucket} * dim, dim};
  }

  std::size_t num_parameters() const {
    return weights.size() + ln_gain.size() + ln_bias.size();
  }

  void validate() const;

  /// All-zero weights, gain 1, bias 0.
  static EncoderModel zeros(const FeaturizerConfig& featurizer, std::uint32_t dim);
  /// weights ~ U(-1/sqrt(dim), 1/sqrt(dim)), gain 1, bias 0.
  static EncoderModel random(const FeaturizerConfig& featurizer,
                             std::uint32_t dim, std::uint64_t seed);

  friend bool operator==(const EncoderModel&, const EncoderModel&) = default;
};

// ---------------------------------------------------------------------------
// Forward pass

/// Intermediate values kept for the backward pass.
struct Activation {
  std::vector<double> pre;         // W^T x
  std::vector<double> normalized;  // (pre - mean) * inv_std
  std::vector<double> output;
  double inv_std = 1.0;
};

Activation forward(const EncoderModel& model, const SparseFeatures& features);

/// LayerNorm(z; gain, bias, eps) over a single vector.
std::vector<double> layer_norm(std::span<const double> z,
                               std::span<const float> gain,
                               std::span<const float> bias, double epsilon);

std::vector<float> embed(const EncoderModel& model, std::string_view text);
std::vector<float> embed_features(const EncoderModel& model,
                                  const SparseFeatures& features);
double score(const EncoderModel& model, std::string_view query,
             std::string_view passage);

/// Row i = embed(passage i). Rows are written by disjoint workers, so the
/// result does not depend on the thread count.
EmbeddingMatrix embed_corpus(const EncoderModel& model, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Loss and gradients

/// -log softmax(positive) over {positive} U negatives, max-shifted.
/// Throws NumericError on non-finite input or empty negatives.
double nll_loss(double positive, std::span<const double> negatives);

/// Sparse accumulator for dL/dtheta. Rows are kept in first-touch order.
class GradientBuffer {
 public:
  explicit GradientBuffer(const EncoderModel& model);

  /// Back-propagates d(loss)/d(output) through one forward pass.
  void accumulate(const EncoderModel& model, const SparseFeatures& features,
                  const Activation& act, std::span<const double> d_output);

  void clear();
  void scale(double factor);
  double squared_norm() const;

  const std::vector<std::uint32_t>& touched_rows() const { return touched_; }
  std::span<const double> row(std::size_t slot) const {
    return {rows_.data() + slot * dim_, dim_};
  }
  const std::vector<double>& d_gain() const { return d_gain_; }
  const std::vector<double>& d_bias() const { return d_bias_; }

  /// Dense copy laid out like the model: weights, then gain, then bias.
  std::vector<double> dense() const;

 private:
  std::size_t dim_;
  std::vector<std::int32_t> slot_of_;
  std::vector<std::uint32_t> touched_;
  std::vector<double> rows_;
  std::vector<double> d_gain_;
  std::vector<double> d_bias_;
};

/// NLL of one example whose candidates[0] is the positive. When grad is
/// non-null the example's gradient is added to it.
double nll_example(const EncoderModel& model, const SparseFeatures& query,
                   std::span<const SparseFeatures> candidates,
                   GradientBuffer* grad = nullptr);

// ---------------------------------------------------------------------------
// Optimisation

struct TrainConfig {
  double learning_rate = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 10;
  int batch_size = 32;
  // Cap on explicit negatives used per example; 0 uses all of them.
  int negatives_per_example = 0;
  bool in_batch_negatives = false;
  std::uint64_t seed = 1;
  std::optional<double> grad_clip;

  void validate() const;
};

/// Adam with bias correction. Embedding rows are updated lazily: only rows
/// with a gradient in the current step move, and their moments decay only
/// on those steps. Gain and bias are dense.
class AdamOptimizer {
 public:
  AdamOptimizer(const EncoderModel& model, const TrainConfig& config);
  void step(EncoderModel& model, const GradientBuffer& grad);
  std::int64_t steps() const { return t_; }

 private:
  TrainConfig config_;
  std::int64_t t_ = 0;
  std::vector<float> m_, v_;
  std::vector<double> m_gain_, v_gain_, m_bias_, v_bias_;
};

struct EpochStats {
  int epoch = 0;
  double train_nll = 0.0;
  double dev_nll = 0.0;
};

struct TrainResult {
  EncoderModel model;
  std::vector<EpochStats> epochs;  // epochs[0] is the initialisation
  int best_epoch = 0;
  /// Mean training NLL of the selected epoch.
  double train_nll() const;
};

/// Trains a fresh encoder of the given width. Returns the parameters of the
/// epoch (0 = initialisation) with the lowest dev NLL; when dev is empty the
/// final epoch is returned.
/// Throws ArgumentError on an empty training set and TrainingError when the
/// loss stops being finite.
TrainResult train(const std::vector<AugmentedExample>& train_examples,
                  const std::vector<AugmentedExample>& dev_examples,
                  const Corpus& corpus, const FeaturizerConfig& featurizer,
                  std::uint32_t dim, const TrainConfig& config,
                  std::uint64_t init_seed);

/// Mean NLL with the batching rules of `config` (consecutive batches, no
/// shuffling). epoch selects which positive is used.
double mean_nll(const EncoderModel& model,
                const std::vector<AugmentedExample>& examples,
                const Corpus& corpus, const TrainConfig& config, int epoch = 0);

// ---------------------------------------------------------------------------
// Model file: "DRBM", u32 version, u32 flags, featurizer, dim, epsilon,
// then weights / gain / bias as little-endian float32.

void write_model(BinaryWriter& out, const EncoderModel& model);
EncoderModel read_model(BinaryReader& in);
void save_model(const std::string& path, const EncoderModel& model);
EncoderModel load_model(const std::string& path);

}  // namespace drboost
