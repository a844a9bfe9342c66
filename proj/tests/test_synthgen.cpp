#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "drboost/boosting.hpp"
#include "drboost/common.hpp"
#include "drboost/metrics.hpp"
#include "drboost/synthgen.hpp"
#include "test_util.hpp"

using namespace drboost;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.num_topics = 4;
  c.passages_per_topic = 60;
  c.queries_per_topic = 30;
  c.vocab_size = 500;
  c.subtopics_per_topic = 4;
  return c;
}

std::set<std::string> words_of(const std::string& text) {
  std::istringstream in(text);
  std::set<std::string> out;
  for (std::string w; in >> w;) out.insert(w);
  return out;
}

}  // namespace

TEST(Synthgen, ShapesAndIds) {
  const auto c = small_config();
  const auto d = generate(c);
  EXPECT_EQ(d.corpus.size(), 240u);
  EXPECT_EQ(d.train.size() + d.dev.size(), 120u);
  EXPECT_EQ(d.dev.size(), 24u);
  EXPECT_EQ(d.corpus[0].id, "p000");
  EXPECT_EQ(d.topic_of_passage[61], 1);
  EXPECT_EQ(d.subtopic_of_passage[61], 1);
  for (std::size_t i = 0; i < d.corpus.size(); ++i)
    EXPECT_EQ(words_of(d.corpus[i].text).size() > 0, true);
}

TEST(Synthgen, NoiselessFullLengthQueriesAreBagsOfTheirGold) {
  auto c = small_config();
  c.noise_rate = 0.0;
  c.words_per_passage = 12;
  c.query_len = 12;
  const auto d = generate(c);
  for (const auto* split : {&d.train, &d.dev}) {
    for (const auto& p : *split) {
      ASSERT_EQ(p.positive_ids.size(), 1u);
      const auto& gold = d.corpus[d.corpus.row_of(p.positive_ids[0])];
      const auto q = words_of(p.query_text);
      const auto g = words_of(gold.text);
      EXPECT_EQ(q, g) << p.query_id;
    }
  }
}

TEST(Synthgen, QueriesUseOnlyGoldOrNoiseWords) {
  const auto d = generate(small_config());
  for (const auto& p : d.train) {
    const auto g = words_of(d.corpus[d.corpus.row_of(p.positive_ids[0])].text);
    for (const auto& w : words_of(p.query_text))
      EXPECT_TRUE(g.count(w) || w[0] == 'n') << w;
  }
}

TEST(Synthgen, GoldsAreDistinctWithinTopic) {
  const auto d = generate(small_config());
  std::set<std::string> seen;
  for (const auto* split : {&d.train, &d.dev})
    for (const auto& p : *split) EXPECT_TRUE(seen.insert(p.positive_ids[0]).second);
}

TEST(Synthgen, DeterministicInSeed) {
  auto c = small_config();
  const auto a = generate(c);
  const auto b = generate(c);
  EXPECT_EQ(a.corpus, b.corpus);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.dev, b.dev);
  c.seed = 8;
  EXPECT_FALSE(generate(c).corpus == a.corpus);
}

TEST(Synthgen, DefaultConfigIsNeitherTrivialNorHopelessLexically) {
  const SynthConfig c;
  const auto d = generate(c);
  EXPECT_EQ(d.corpus.size(), 20000u);
  FeaturizerConfig f;
  f.use_bigrams = false;
  const LexicalRetriever lexical(d.corpus, f);
  std::vector<std::string> texts;
  for (const auto& p : d.dev) texts.push_back(p.query_text);
  const auto results = lexical.retrieve(texts, 10);
  const double r10 = recall_at_k(results, golds_of(d.dev), 10);
  EXPECT_GT(r10, 0.2);
  EXPECT_LT(r10, 0.95);
}

TEST(Synthgen, ValidationErrors) {
  const auto expect_bad = [](auto mutate) {
    SynthConfig c = small_config();
    mutate(c);
    EXPECT_THROW(c.validate(), ArgumentError);
  };
  expect_bad([](SynthConfig& c) { c.num_topics = 0; });
  expect_bad([](SynthConfig& c) { c.noise_rate = 1.0; });
  expect_bad([](SynthConfig& c) { c.queries_per_topic = 61; });
  expect_bad([](SynthConfig& c) { c.query_len = 41; });
  expect_bad([](SynthConfig& c) { c.vocab_size = 5; });
  expect_bad([](SynthConfig& c) { c.dev_fraction = 1.0; });
  expect_bad([](SynthConfig& c) { c.subtopic_rate = 1.5; });
  EXPECT_NO_THROW(small_config().validate());
}

TEST(Synthgen, WriteDatasetFiles) {
  drboost::testing::TempDir dir;
  const auto d = generate(small_config());
  write_dataset(dir.path().string(), d);
  EXPECT_EQ(load_corpus(dir.file("corpus.jsonl")), d.corpus);
  EXPECT_EQ(load_train_pairs(dir.file("dev.jsonl"), d.corpus), d.dev);
  const auto topics = drboost::testing::read_text(dir.file("topics.tsv"));
  EXPECT_EQ(topics.substr(0, 10), "p000\t0\t0\np");
  EXPECT_EQ(std::count(topics.begin(), topics.end(), '\n'), 240);
}
