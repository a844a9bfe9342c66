#include "drboost/distill.hpp"

#include <algorithm>
#include <cmath>

#include "drboost/common.hpp"

namespace drboost {

const char* distill_init_name(DistillInit init) {
  return init == DistillInit::kRandom ? "random" : "ensemble";
}

DistillInit parse_distill_init(const std::string& name) {
  if (name == "random") return DistillInit::kRandom;
  if (name == "ensemble") return DistillInit::kEnsemble;
  throw ArgumentError("unknown distill init \"" + name + "\"");
}

void DistillConfig::validate() const {
  if (epochs < 0) throw ArgumentError("distill: epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw ArgumentError("distill: learning_rate must be positive");
  if (batch_size < 1) throw ArgumentError("distill: batch_size must be >= 1");
  if (!(passage_weight >= 0.0)) throw ArgumentError("distill: passage_weight must be >= 0");
  as_train_config().validate();
}

TrainConfig DistillConfig::as_train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.adam_beta1 = adam_beta1;
  t.adam_beta2 = adam_beta2;
  t.adam_epsilon = adam_epsilon;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.seed = seed;
  return t;
}

std::vector<DistillTarget> build_targets(const Ensemble& ensemble,
                                         const std::vector<TrainPair>& pairs,
                                         const Corpus& corpus) {
  ensemble.validate();
  std::vector<std::size_t> rows(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].positive_ids.empty())
      throw ValidationError("query " + pairs[i].query_id + " has no positive");
    rows[i] = corpus.row_of(pairs[i].positive_ids.front());
  }
  const FeaturizerConfig& fc = ensemble.components.front().model.featurizer;
  std::vector<DistillTarget> out(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      out[i].query_text = pairs[i].query_text;
      out[i].features = featurize(pairs[i].query_text, fc);
      out[i].query_target = ensemble_embed(ensemble, pairs[i].query_text, Side::kQuery);
      out[i].passage_target =
          ensemble_embed(ensemble, corpus[rows[i]].full_text(), Side::kPassage);
    }
  });
  return out;
}

double distill_loss(std::span<const double> output, std::span<const float> query_target,
                    std::span<const float> passage_target, double passage_weight,
                    std::vector<double>* grad) {
  if (output.size() != query_target.size() || output.size() != passage_target.size())
    throw ArgumentError("distill_loss: dimension mismatch");
  if (grad) grad->assign(output.size(), 0.0);
  double loss = 0.0;
  for (std::size_t j = 0; j < output.size(); ++j) {
    const double dq = output[j] - query_target[j];
    const double dc = output[j] - passage_target[j];
    loss += dq * dq + passage_weight * dc * dc;
    if (grad) (*grad)[j] = 2.0 * dq + 2.0 * passage_weight * dc;
  }
  if (!std::isfinite(loss)) throw NumericError("distill_loss: non-finite value");
  return loss;
}

double distill_lower_bound(const DistillTarget& t, double w) {
  double s = 0.0;
  for (std::size_t j = 0; j < t.query_target.size(); ++j) {
    const double d = static_cast<double>(t.query_target[j]) - t.passage_target[j];
    s += d * d;
  }
  return w / (1.0 + w) * s;
}

double mean_distill_loss(const EncoderModel& model, const std::vector<DistillTarget>& targets,
                         double passage_weight) {
  if (targets.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : targets) {
    const auto act = forward(model, t.features);
    total += distill_loss(act.output, t.query_target, t.passage_target, passage_weight);
  }
  return total / static_cast<double>(targets.size());
}

EncoderModel linearise_ensemble(const Ensemble& ensemble, const std::vector<std::string>& texts) {
  ensemble.validate();
  const FeaturizerConfig& fc = ensemble.components.front().model.featurizer;
  const std::uint32_t total = static_cast<std::uint32_t>(ensemble.total_dim());
  EncoderModel out = EncoderModel::zeros(fc, total);
  out.layer_norm = false;
  std::vector<SparseFeatures> feats;
  feats.reserve(texts.size());
  for (const auto& t : texts) feats.push_back(featurize(t, fc));

  std::size_t offset = 0;
  for (const auto& c : ensemble.components) {
    const EncoderModel& m = c.model;
    const std::size_t d = m.dim;
    double scale = 1.0;
    if (m.layer_norm) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& f : feats) {
        if (f.empty()) continue;
        sum += forward(m, f).inv_std;
        ++n;
      }
      if (n > 0) scale = sum / static_cast<double>(n);
    }
    for (std::uint32_t b = 0; b < fc.num_buckets; ++b) {
      const auto src = m.weight_row(b);
      auto dst = out.weight_row(b);
      double mean = 0.0;
      if (m.layer_norm) {
        for (float v : src) mean += v;
        mean /= static_cast<double>(d);
      }
      for (std::size_t j = 0; j < d; ++j) {
        const double g = m.layer_norm ? m.ln_gain[j] : 1.0;
        dst[offset + j] = static_cast<float>(g * scale * (src[j] - mean));
      }
    }
    for (std::size_t j = 0; j < d; ++j) out.ln_bias[offset + j] = m.ln_bias[j];
    offset += d;
  }
  return out;
}

DistillResult distill(const Ensemble& ensemble, const std::vector<TrainPair>& train,
                      const std::vector<TrainPair>& dev, const Corpus& corpus,
                      const DistillConfig& config) {
  config.validate();
  if (train.empty()) throw ArgumentError("distill: empty training set");
  const auto train_t = build_targets(ensemble, train, corpus);
  const auto dev_t = build_targets(ensemble, dev, corpus);
  const FeaturizerConfig& fc = ensemble.components.front().model.featurizer;
  const auto dim = static_cast<std::uint32_t>(ensemble.total_dim());
  const double w = config.passage_weight;

  DistillResult result;
  if (config.init == DistillInit::kEnsemble) {
    std::vector<std::string> texts;
    for (const auto& p : train) texts.push_back(p.query_text);
    result.model = linearise_ensemble(ensemble, texts);
  } else {
    result.model = EncoderModel::random(fc, dim, mix_seed(config.seed, 1));
    result.model.layer_norm = false;
  }
  EncoderModel& model = result.model;
  const bool has_dev = !dev_t.empty();
  result.epochs.push_back({0, mean_distill_loss(model, train_t, w),
                           has_dev ? mean_distill_loss(model, dev_t, w) : 0.0});
  if (config.epochs == 0) return result;

  const TrainConfig tc = config.as_train_config();
  AdamOptimizer adam(model, tc);
  GradientBuffer grad(model);
  EncoderModel best = model;
  double best_dev = result.epochs.front().dev_nll;
  const std::size_t n = train_t.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::vector<double> d_out;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(config.seed, 100 + static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t len = std::min(bs, n - start);
      grad.clear();
      for (std::size_t k = start; k < start + len; ++k) {
        const auto& t = train_t[order[k]];
        const auto act = forward(model, t.features);
        epoch_loss += distill_loss(act.output, t.query_target, t.passage_target, w, &d_out);
        grad.accumulate(model, t.features, act, d_out);
      }
      grad.scale(1.0 / static_cast<double>(len));
      adam.step(model, grad);
    }
    EpochStats stats{epoch, epoch_loss / static_cast<double>(n),
                     has_dev ? mean_distill_loss(model, dev_t, w) : 0.0};
    if (!std::isfinite(stats.train_nll) || !std::isfinite(stats.dev_nll))
      throw TrainingError("distill: non-finite loss in epoch " + std::to_string(epoch));
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

}  // namespace drboost
