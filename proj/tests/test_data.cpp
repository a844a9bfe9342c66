#include <algorithm>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include "json.hpp"

#include "drboost/common.hpp"
#include "drboost/data.hpp"
#include "drboost/synthgen.hpp"
#include "test_util.hpp"

using namespace drboost;
using drboost::testing::read_text;
using drboost::testing::TempDir;
using drboost::testing::write_text;

namespace {

std::string passage_line(const std::string& id, const std::string& text) {
  return R"({"id":")" + id + R"(","title":"","text":")" + text + "\"}\n";
}

Corpus small_corpus(int n) {
  Corpus c;
  for (int i = 0; i < n; ++i) c.add({"p" + std::to_string(i), "", "text " + std::to_string(i)});
  return c;
}

std::vector<TrainPair> pairs(int n) {
  std::vector<TrainPair> out;
  for (int i = 0; i < n; ++i) out.push_back({"q" + std::to_string(i), "query", {"p0"}});
  return out;
}

}  // namespace

TEST(LoadCorpus, PreservesOrder) {
  TempDir dir;
  write_text(dir.file("c.jsonl"),
             passage_line("b", "two") + passage_line("a", "one") + passage_line("c", "three"));
  const Corpus c = load_corpus(dir.file("c.jsonl"));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].id, "b");
  EXPECT_EQ(c[1].id, "a");
  EXPECT_EQ(c[2].id, "c");
  EXPECT_EQ(c.row_of("a"), 1u);
}

TEST(LoadCorpus, DuplicateIdCitesIdAndLine) {
  TempDir dir;
  std::string text;
  for (int line = 1; line <= 9; ++line)
    text += passage_line(line == 2 || line == 9 ? "p7" : "x" + std::to_string(line), "t");
  write_text(dir.file("c.jsonl"), text);
  try {
    load_corpus(dir.file("c.jsonl"));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("p7"), std::string::npos) << msg;
    EXPECT_NE(msg.find(":9"), std::string::npos) << msg;
  }
}

TEST(LoadCorpus, RejectsMalformedRecords) {
  TempDir dir;
  const std::string path = dir.file("c.jsonl");
  write_text(path, "{not json}\n");
  EXPECT_THROW(load_corpus(path), ParseError);
  write_text(path, R"({"id":"a","text":"t"})" "\n");
  EXPECT_THROW(load_corpus(path), ParseError);  // missing title
  write_text(path, R"({"id":"a","title":"","text":"t","x":1})" "\n");
  EXPECT_THROW(load_corpus(path), ParseError);  // extra key
  write_text(path, R"({"id":"","title":"","text":"t"})" "\n");
  EXPECT_THROW(load_corpus(path), ValidationError);
  write_text(path, R"({"id":"a","title":"","text":""})" "\n");
  EXPECT_THROW(load_corpus(path), ValidationError);
  write_text(path, R"({"id":"a","title":"only title","text":""})" "\n");
  EXPECT_EQ(load_corpus(path).size(), 1u);
  EXPECT_THROW(load_corpus(dir.file("missing.jsonl")), IoError);
}

TEST(LoadCorpus, SyntheticCorpusRoundTripsByteIdentically) {
  TempDir dir;
  const SynthDataset data = generate(SynthConfig{});
  ASSERT_EQ(data.corpus.size(), 20000u);
  save_corpus(dir.file("a.jsonl"), data.corpus);
  const Corpus loaded = load_corpus(dir.file("a.jsonl"));
  EXPECT_EQ(loaded.size(), 20000u);
  EXPECT_TRUE(loaded == data.corpus);
  save_corpus(dir.file("b.jsonl"), loaded);
  EXPECT_EQ(read_text(dir.file("a.jsonl")), read_text(dir.file("b.jsonl")));
}

TEST(LoadCorpus, KeyOrderDoesNotMatter) {
  TempDir dir;
  write_text(dir.file("c.jsonl"), R"({"text":"hi","id":"z","title":"T"})" "\n");
  const Corpus c = load_corpus(dir.file("c.jsonl"));
  EXPECT_EQ(c[0].title, "T");
  EXPECT_EQ(c[0].full_text(), "T hi");
}

TEST(LoadTrainPairs, ResolvesPositivesAgainstCorpus) {
  TempDir dir;
  const Corpus corpus = small_corpus(3);
  write_text(dir.file("t.jsonl"),
             R"({"query_id":"q1","query_text":"x","positive_ids":["p1"]})" "\n");
  const auto ok = load_train_pairs(dir.file("t.jsonl"), corpus);
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(ok[0].positive_ids, std::vector<std::string>{"p1"});

  write_text(dir.file("t.jsonl"),
             R"({"query_id":"q1","query_text":"x","positive_ids":["zzz"]})" "\n");
  try {
    load_train_pairs(dir.file("t.jsonl"), corpus);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("zzz"), std::string::npos);
  }
  // Without the corpus the same file parses.
  EXPECT_EQ(load_train_pairs(dir.file("t.jsonl")).size(), 1u);
}

TEST(LoadTrainPairs, RejectsDuplicateQueryIdsAndEmptyPositives) {
  TempDir dir;
  const std::string line = R"({"query_id":"q1","query_text":"x","positive_ids":["p0"]})" "\n";
  write_text(dir.file("t.jsonl"), line + line);
  EXPECT_THROW(load_train_pairs(dir.file("t.jsonl")), ValidationError);
  write_text(dir.file("t.jsonl"),
             R"({"query_id":"q1","query_text":"x","positive_ids":[]})" "\n");
  EXPECT_ANY_THROW(load_train_pairs(dir.file("t.jsonl")));
}

TEST(LoadTrainPairs, SyntheticTrainFileHasAllPairsResolved) {
  TempDir dir;
  const SynthDataset data = generate(SynthConfig{});
  save_train_pairs(dir.file("train.jsonl"), data.train);
  const auto loaded = load_train_pairs(dir.file("train.jsonl"), data.corpus);
  EXPECT_EQ(loaded.size(), 2000u);
  EXPECT_EQ(loaded, data.train);
}

TEST(Qrels, RoundTripAndValidation) {
  TempDir dir;
  Qrels q{{"q1", {{"p1", 3}, {"p2", 1}}}, {"q2", {{"p9", 2}}}};
  save_qrels(dir.file("q.tsv"), q);
  EXPECT_EQ(load_qrels(dir.file("q.tsv")), q);
  write_text(dir.file("bad.tsv"), "q1\tp1\t0\n");
  EXPECT_THROW(load_qrels(dir.file("bad.tsv")), ValidationError);
  write_text(dir.file("bad.tsv"), "q1\tp1\n");
  EXPECT_THROW(load_qrels(dir.file("bad.tsv")), ParseError);
  write_text(dir.file("bad.tsv"), "q1\tp1\t2x\n");
  EXPECT_THROW(load_qrels(dir.file("bad.tsv")), ParseError);
  const Qrels from = qrels_from_pairs({{"q", "t", {"a", "b"}}});
  EXPECT_EQ(from.at("q").at("b"), 1);
}

TEST(AugmentedExample, RejectsOverlapAndEmptyNegatives) {
  TrainPair p{"q", "text", {"p1", "p2"}};
  EXPECT_THROW(make_augmented(p, {}), ValidationError);
  EXPECT_THROW(make_augmented(p, {"p3", "p2"}), ValidationError);
  const auto ex = make_augmented(p, {"p3"});
  EXPECT_EQ(ex.negative_ids(), std::vector<std::string>{"p3"});
}

TEST(SplitDev, CardinalityAndDisjointness) {
  const auto [train, dev] = split_dev(pairs(10), 0.2, 1);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(dev.size(), 2u);
  std::set<std::string> ids;
  for (const auto& p : train) ids.insert(p.query_id);
  for (const auto& p : dev) EXPECT_FALSE(ids.count(p.query_id));
}

TEST(SplitDev, DeterministicAndOrderPreserving) {
  const auto all = pairs(50);
  const auto a = split_dev(all, 0.3, 4);
  const auto b = split_dev(all, 0.3, 4);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  auto index = [](const TrainPair& p) { return std::stoi(p.query_id.substr(1)); };
  EXPECT_TRUE(std::is_sorted(a.second.begin(), a.second.end(),
                             [&](const auto& x, const auto& y) { return index(x) < index(y); }));
}

TEST(SplitDev, DifferentSeedsGiveDifferentOverlappingDevSets) {
  const auto all = pairs(2000);
  const auto a = split_dev(all, 0.2, 1).second;
  const auto b = split_dev(all, 0.2, 2).second;
  std::set<std::string> ids;
  for (const auto& p : a) ids.insert(p.query_id);
  std::size_t overlap = 0;
  for (const auto& p : b) overlap += ids.count(p.query_id);
  EXPECT_LT(overlap, b.size());
  EXPECT_GT(overlap, 0u);
}

TEST(SplitDev, RejectsFractionOutsideOpenInterval) {
  EXPECT_THROW(split_dev(pairs(10), 0.0, 1), ArgumentError);
  EXPECT_THROW(split_dev(pairs(10), 1.0, 1), ArgumentError);
}
