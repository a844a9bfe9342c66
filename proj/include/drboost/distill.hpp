#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drboost/boosting.hpp"
#include "drboost/encoder.hpp"

namespace drboost {

enum class DistillInit {
  kRandom,    // weights ~ U(+-1/sqrt(dim)), bias 0
  kEnsemble,  // per-component linearisation of the ensemble's query side
};
const char* distill_init_name(DistillInit init);
DistillInit parse_distill_init(const std::string& name);

struct DistillConfig {
  int epochs = 10;
  double learning_rate = 1e-2;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Weight of the passage-target term: L = |E(q)-q|^2 + w |E(q)-c|^2.
  double passage_weight = 1.0;
  DistillInit init = DistillInit::kEnsemble;

  void validate() const;
  TrainConfig as_train_config() const;
};

struct DistillTarget {
  std::string query_text;
  SparseFeatures features;
  std::vector<float> query_target;    // q-bar, query side
  std::vector<float> passage_target;  // c-bar, passage side of the first positive
};

/// Parallel over pairs; row order follows `pairs`. Throws ValidationError
/// when a first positive is not in the corpus.
std::vector<DistillTarget> build_targets(const Ensemble& ensemble,
                                         const std::vector<TrainPair>& pairs,
                                         const Corpus& corpus);

/// |out - q|^2 + w |out - c|^2. When grad is non-null it receives dL/dout.
double distill_loss(std::span<const double> output, std::span<const float> query_target,
                    std::span<const float> passage_target, double passage_weight,
                    std::vector<double>* grad = nullptr);

/// Per-example lower bound w/(1+w) |q - c|^2 (|q-c|^2/2 for w = 1).
double distill_lower_bound(const DistillTarget& target, double passage_weight);

/// Mean L_phi of a query encoder over targets.
double mean_distill_loss(const EncoderModel& model, const std::vector<DistillTarget>& targets,
                         double passage_weight);

/// Linear query encoder of width total_dim whose block r is
/// gain_r * s_r * (W_r - rowmean(W_r)), s_r the mean inverse standard
/// deviation of component r over `texts`; bias = concatenated ln_bias.
EncoderModel linearise_ensemble(const Ensemble& ensemble, const std::vector<std::string>& texts);

struct DistillResult {
  EncoderModel model;  // layer_norm = false, dim = ensemble total_dim
  std::vector<EpochStats> epochs;  // train_nll / dev_nll hold L_phi
  int best_epoch = 0;
};

/// Adam on L_phi with dev-loss model selection (epoch 0 = initialisation).
DistillResult distill(const Ensemble& ensemble, const std::vector<TrainPair>& train,
                      const std::vector<TrainPair>& dev, const Corpus& corpus,
                      const DistillConfig& config);

}  // namespace drboost
