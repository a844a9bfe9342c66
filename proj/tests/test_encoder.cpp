#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "drboost/common.hpp"
#include "drboost/encoder.hpp"
#include "drboost/synthgen.hpp"
#include "test_util.hpp"

using namespace drboost;

namespace {

FeaturizerConfig tiny_featurizer(std::uint32_t buckets = 16) {
  FeaturizerConfig f;
  f.num_buckets = buckets;
  return f;
}

EncoderModel tiny_model(std::uint64_t seed, std::uint32_t buckets = 16, std::uint32_t dim = 4) {
  EncoderModel m = EncoderModel::random(tiny_featurizer(buckets), dim, seed);
  Rng rng(mix_seed(seed, 7));
  for (auto& g : m.ln_gain) g = static_cast<float>(rng.uniform(0.5, 1.5));
  for (auto& b : m.ln_bias) b = static_cast<float>(rng.uniform(-0.3, 0.3));
  return m;
}

// Straight-line oracle: dense x^T W, then layer norm with population variance.
std::vector<double> oracle_embed(const EncoderModel& m, const std::string& text) {
  std::vector<double> x(m.featurizer.num_buckets, 0.0);
  const auto f = featurize(text, m.featurizer);
  for (std::size_t i = 0; i < f.nnz(); ++i) x[f.indices[i]] += f.values[i];
  std::vector<double> z(m.dim, 0.0);
  for (std::uint32_t b = 0; b < m.featurizer.num_buckets; ++b)
    for (std::uint32_t j = 0; j < m.dim; ++j) z[j] += x[b] * m.weights[b * m.dim + j];
  if (!m.layer_norm) {
    for (std::uint32_t j = 0; j < m.dim; ++j) z[j] += m.ln_bias[j];
    return z;
  }
  double mu = 0.0;
  for (double v : z) mu += v / m.dim;
  double var = 0.0;
  for (double v : z) var += (v - mu) * (v - mu) / m.dim;
  std::vector<double> out(m.dim);
  for (std::uint32_t j = 0; j < m.dim; ++j)
    out[j] = m.ln_gain[j] * (z[j] - mu) / std::sqrt(var + m.ln_epsilon) + m.ln_bias[j];
  return out;
}

float& parameter(EncoderModel& m, std::size_t i) {
  if (i < m.weights.size()) return m.weights[i];
  i -= m.weights.size();
  if (i < m.ln_gain.size()) return m.ln_gain[i];
  return m.ln_bias[i - m.ln_gain.size()];
}

struct Toy {
  Corpus corpus;
  std::vector<AugmentedExample> train, dev;
};

Toy toy_set(int n_train, int n_dev) {
  SynthConfig sc;
  sc.num_topics = 5;
  sc.passages_per_topic = 40;
  sc.queries_per_topic = 20;
  sc.vocab_size = 600;
  sc.subtopics_per_topic = 2;
  const auto data = generate(sc);
  Toy t;
  t.corpus = data.corpus;
  std::vector<TrainPair> all = data.train;
  all.insert(all.end(), data.dev.begin(), data.dev.end());
  Rng rng(5);
  for (int i = 0; i < n_train + n_dev; ++i) {
    const auto& p = all[static_cast<std::size_t>(i)];
    std::vector<std::string> negs;
    while (negs.size() < 4) {
      const auto& id = t.corpus[rng.below(t.corpus.size())].id;
      if (id != p.positive_ids[0] && std::find(negs.begin(), negs.end(), id) == negs.end())
        negs.push_back(id);
    }
    (i < n_train ? t.train : t.dev).push_back(make_augmented(p, negs));
  }
  return t;
}

}  // namespace

TEST(Embed, ZeroWeightsGiveBias) {
  EncoderModel m = EncoderModel::zeros(tiny_featurizer(), 4);
  m.ln_bias = {0.5f, -1.0f, 0.0f, 2.0f};
  const auto v = embed(m, "any text at all");
  for (int j = 0; j < 4; ++j) EXPECT_FLOAT_EQ(v[j], m.ln_bias[j]);
  EXPECT_FLOAT_EQ(embed(m, "")[3], 2.0f);  // empty text: epsilon avoids 0/0
  EXPECT_NEAR(score(m, "a", "b"), 0.25 + 1.0 + 4.0, 1e-6);
  m.ln_bias.assign(4, 0.0f);
  EXPECT_EQ(score(m, "a", "b"), 0.0);
}

TEST(Embed, MatchesBruteForceOracle) {
  const EncoderModel m = tiny_model(1234);
  const auto got = embed(m, "nobel prize");
  const auto want = oracle_embed(m, "nobel prize");
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(got[j], want[j], 1e-6);

  const auto q = oracle_embed(m, "who won the prize"), c = oracle_embed(m, "the nobel prize in physics");
  double s = 0.0;
  for (int j = 0; j < 4; ++j) s += q[j] * c[j];
  EXPECT_NEAR(score(m, "who won the prize", "the nobel prize in physics"), s, 1e-5);

  EncoderModel lin = m;
  lin.layer_norm = false;
  const auto got_lin = embed(lin, "nobel prize");
  const auto want_lin = oracle_embed(lin, "nobel prize");
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(got_lin[j], want_lin[j], 1e-6);
}

TEST(Embed, SelfScoreIsSquaredNorm) {
  const EncoderModel m = tiny_model(3);
  const auto v = embed(m, "self similarity");
  EXPECT_NEAR(score(m, "self similarity", "self similarity"), dot(v, v), 1e-9);
  EXPECT_GE(score(m, "self similarity", "self similarity"), 0.0);
}

TEST(LayerNorm, UnitGainZeroBiasStandardises) {
  Rng rng(8);
  std::vector<double> z(64);
  for (auto& v : z) v = rng.normal() * 3.0 + 1.0;
  const std::vector<float> gain(64, 1.0f), bias(64, 0.0f);
  const auto out = layer_norm(z, gain, bias, 1e-5);
  double mu = 0.0, var = 0.0;
  for (double v : out) mu += v / 64.0;
  for (double v : out) var += (v - mu) * (v - mu) / 64.0;
  EXPECT_NEAR(mu, 0.0, 1e-4);
  EXPECT_NEAR(var, 1.0, 1e-4);
}

TEST(NllLoss, UniformScoresGiveLogNPlusOne) {
  for (int n : {1, 3, 7}) {
    std::vector<double> neg(static_cast<std::size_t>(n), 0.25);
    EXPECT_NEAR(nll_loss(0.25, neg), std::log(n + 1.0), 1e-12);
  }
  EXPECT_NEAR(nll_loss(2.0, std::vector<double>{2.0, 2.0, 2.0}), 1.3862943611198906, 1e-12);
}

TEST(NllLoss, SaturatesAndMatchesDirectEvaluation) {
  EXPECT_LT(nll_loss(100.0, std::vector<double>{0.0, 0.0, 0.0}), 1e-40);
  // -log(e^1 / (e^1 + e^0 + e^2)), evaluated independently.
  EXPECT_NEAR(nll_loss(1.0, std::vector<double>{0.0, 2.0}), 1.4076059644443804, 1e-12);
  EXPECT_NEAR(nll_loss(1000.0, std::vector<double>{1000.0}), std::log(2.0), 1e-12);
}

TEST(NllLoss, NonNegativeOnRandomScores) {
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> neg(1 + rng.below(10));
    for (auto& s : neg) s = rng.normal() * 10.0;
    ASSERT_GE(nll_loss(rng.normal() * 10.0, neg), 0.0);
  }
}

TEST(NllLoss, RejectsDegenerateInput) {
  EXPECT_THROW(nll_loss(0.0, std::vector<double>{}), NumericError);
  EXPECT_THROW(nll_loss(std::nan(""), std::vector<double>{0.0}), NumericError);
  EXPECT_THROW(nll_loss(0.0, std::vector<double>{INFINITY}), NumericError);
}

TEST(Gradient, NllMatchesCentralFiniteDifferences) {
  for (int trial = 0; trial < 20; ++trial) {
    EncoderModel m = tiny_model(100 + static_cast<std::uint64_t>(trial));
    const auto q = featurize("alpha beta gamma", m.featurizer);
    const std::vector<SparseFeatures> cands{featurize("beta gamma delta", m.featurizer),
                                            featurize("epsilon zeta", m.featurizer),
                                            featurize("alpha eta theta iota", m.featurizer)};
    GradientBuffer grad(m);
    nll_example(m, q, cands, &grad);
    const auto analytic = grad.dense();
    ASSERT_EQ(analytic.size(), m.num_parameters());
    double worst = 0.0;
    for (std::size_t i = 0; i < m.num_parameters(); ++i) {
      float& p = parameter(m, i);
      const float orig = p;
      p = orig + 1e-4f;
      const double up = p, lp = nll_example(m, q, cands);
      p = orig - 1e-4f;
      const double down = p, lm = nll_example(m, q, cands);
      p = orig;
      const double fd = (lp - lm) / (up - down);
      worst = std::max(worst, std::fabs(fd - analytic[i]) /
                                  std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-3}));
    }
    EXPECT_LT(worst, 1e-4) << "trial " << trial;
  }
}

TEST(Train, ZeroEpochsReturnsInitialisation) {
  const Toy t = toy_set(20, 5);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto fc = tiny_featurizer(1024);
  const auto result = train(t.train, t.dev, t.corpus, fc, 4, cfg, 77);
  EXPECT_EQ(result.model, EncoderModel::random(fc, 4, 77));
  EXPECT_EQ(result.best_epoch, 0);
  EXPECT_EQ(result.epochs.size(), 1u);
}

TEST(Train, ToyLossStrictlyDecreasesOverFirstThreeEpochs) {
  const Toy t = toy_set(50, 0);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  const auto result = train(t.train, {}, t.corpus, tiny_featurizer(1024), 8, cfg, 1);
  ASSERT_EQ(result.epochs.size(), 4u);
  for (int e = 1; e <= 3; ++e)
    EXPECT_LT(result.epochs[e].train_nll, result.epochs[e - 1].train_nll) << "epoch " << e;
  EXPECT_EQ(result.best_epoch, 3);  // no dev set: final epoch
}

TEST(Train, SelectsBestDevEpochAndIsDeterministic) {
  const Toy t = toy_set(60, 20);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 8;
  const auto a = train(t.train, t.dev, t.corpus, tiny_featurizer(1024), 8, cfg, 3);
  const auto b = train(t.train, t.dev, t.corpus, tiny_featurizer(1024), 8, cfg, 3);
  EXPECT_EQ(a.model, b.model);
  double best = a.epochs[0].dev_nll;
  int arg = 0;
  for (std::size_t e = 1; e < a.epochs.size(); ++e)
    if (a.epochs[e].dev_nll < best) best = a.epochs[e].dev_nll, arg = static_cast<int>(e);
  EXPECT_EQ(a.best_epoch, arg);
  EXPECT_NEAR(mean_nll(a.model, t.dev, t.corpus, cfg, 0), best, 1e-9);

  set_num_threads(4);
  const auto c = train(t.train, t.dev, t.corpus, tiny_featurizer(1024), 8, cfg, 3);
  set_num_threads(0);
  EXPECT_EQ(a.model, c.model);
}

TEST(Train, InBatchNegativesRunWithoutExplicitNegativesCap) {
  const Toy t = toy_set(40, 0);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.in_batch_negatives = true;
  cfg.negatives_per_example = 1;
  const auto r = train(t.train, {}, t.corpus, tiny_featurizer(1024), 4, cfg, 1);
  EXPECT_LT(r.epochs.back().train_nll, r.epochs.front().train_nll);
}

TEST(Train, RejectsEmptyTrainingSet) {
  const Toy t = toy_set(1, 0);
  EXPECT_THROW(train({}, {}, t.corpus, tiny_featurizer(), 4, TrainConfig{}, 1), ArgumentError);
  TrainConfig bad;
  bad.learning_rate = -1.0;
  EXPECT_ANY_THROW(bad.validate());
}

TEST(Adam, UpdatesOnlyTouchedRows) {
  EncoderModel m = tiny_model(9);
  const EncoderModel before = m;
  TrainConfig cfg;
  AdamOptimizer opt(m, cfg);
  SparseFeatures f;
  f.indices = {3};
  f.values = {1.0f};
  GradientBuffer grad(m);
  const auto act = forward(m, f);
  grad.accumulate(m, f, act, std::vector<double>{1.0, -1.0, 0.5, 0.0});
  opt.step(m, grad);
  for (std::uint32_t b = 0; b < 16; ++b) {
    const bool changed = !std::equal(m.weight_row(b).begin(), m.weight_row(b).end(),
                                     before.weight_row(b).begin());
    EXPECT_EQ(changed, b == 3) << "bucket " << b;
  }
  // First Adam step moves each touched coordinate by ~lr in the gradient's
  // opposite sign (bias-corrected m/sqrt(v) = sign(g)).
  EXPECT_NEAR(m.ln_bias[0] - before.ln_bias[0], -cfg.learning_rate, 1e-6);
  EXPECT_NEAR(m.ln_bias[1] - before.ln_bias[1], cfg.learning_rate, 1e-6);
  EXPECT_EQ(m.ln_bias[3], before.ln_bias[3]);
}

TEST(EmbedCorpus, RowsMatchIndividualEmbeddingsAndThreadCount) {
  SynthConfig sc;
  sc.num_topics = 3;
  sc.passages_per_topic = 50;
  sc.queries_per_topic = 5;
  sc.vocab_size = 400;
  sc.subtopics_per_topic = 2;
  const auto data = generate(sc);
  const EncoderModel m = tiny_model(2, 256, 6);
  const auto seq = embed_corpus(m, data.corpus);
  ASSERT_EQ(seq.num_rows, data.corpus.size());
  for (std::size_t i = 0; i < seq.num_rows; i += 17) {
    const auto v = embed(m, data.corpus[i].full_text());
    EXPECT_TRUE(std::equal(v.begin(), v.end(), seq.row(i).begin()));
    EXPECT_EQ(seq.row_ids[i], data.corpus[i].id);
  }
  set_num_threads(3);
  const auto par = embed_corpus(m, data.corpus);
  set_num_threads(0);
  EXPECT_EQ(seq, par);

  const auto empty = embed_corpus(m, Corpus{});
  EXPECT_EQ(empty.num_rows, 0u);
  EXPECT_EQ(empty.dim, 6u);
}

TEST(ModelFile, RoundTripsIncludingLayerNormFlag) {
  drboost::testing::TempDir dir;
  EncoderModel m = tiny_model(5);
  save_model(dir.file("m.drbm"), m);
  EXPECT_EQ(load_model(dir.file("m.drbm")), m);
  m.layer_norm = false;
  save_model(dir.file("lin.drbm"), m);
  const auto back = load_model(dir.file("lin.drbm"));
  EXPECT_FALSE(back.layer_norm);
  EXPECT_EQ(back, m);

  const std::string bytes = drboost::testing::read_text(dir.file("m.drbm"));
  EXPECT_EQ(bytes.substr(0, 4), "DRBM");
  drboost::testing::write_text(dir.file("cut.drbm"), bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_model(dir.file("cut.drbm")), ParseError);
  drboost::testing::write_text(dir.file("bad.drbm"), "XXXX" + bytes.substr(4));
  EXPECT_THROW(load_model(dir.file("bad.drbm")), ParseError);
}

TEST(EncoderModel, ValidateCatchesShapeAndNonFinite) {
  EncoderModel m = tiny_model(1);
  EXPECT_NO_THROW(m.validate());
  m.ln_gain.pop_back();
  EXPECT_THROW(m.validate(), ValidationError);
  m = tiny_model(1);
  m.weights[0] = std::nanf("");
  EXPECT_THROW(m.validate(), ValidationError);
}
