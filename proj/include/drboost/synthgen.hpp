#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drboost/data.hpp"

namespace drboost {

/// Topical synthetic retrieval data. The vocabulary is split into a shared
/// noise pool of vocab_size / (num_topics + 1) words and num_topics disjoint
/// topic slices sharing the remainder. Each topic slice is split again into
/// a general half and subtopics_per_topic equal subtopic vocabularies;
/// passages belong to one subtopic (round-robin within their topic). Within
/// every vocabulary words are Zipfian.
struct SynthConfig {
  int num_topics = 20;
  int passages_per_topic = 1000;
  int vocab_size = 3000;
  int words_per_passage = 40;
  int queries_per_topic = 125;
  int query_len = 5;
  double noise_rate = 0.15;
  int subtopics_per_topic = 50;
  // Probability that a non-noise passage word comes from the subtopic
  // vocabulary rather than the topic's general half.
  double subtopic_rate = 0.5;
  // Optional third level: each subtopic vocabulary gives half its words to
  // leaves_per_subtopic leaf vocabularies, drawn with probability leaf_rate.
  int leaves_per_subtopic = 1;
  double leaf_rate = 0.0;
  double zipf_exponent = 1.0;
  double dev_fraction = 0.2;
  std::uint64_t seed = 7;

  /// Throws ArgumentError on non-positive sizes, noise_rate outside [0, 1),
  /// more queries than passages per topic, or a vocabulary too small to give
  /// every topic at least two words.
  void validate() const;
};

struct SynthDataset {
  Corpus corpus;
  std::vector<TrainPair> train;
  std::vector<TrainPair> dev;
  std::vector<int> topic_of_passage;     // aligned with corpus rows
  std::vector<int> subtopic_of_passage;  // index within the topic
};

/// Deterministic in config (including seed). Each query samples query_len
/// token positions of its gold passage without replacement, then replaces
/// each with a noise word with probability noise_rate. Golds are distinct
/// passages within a topic.
SynthDataset generate(const SynthConfig& config);

/// corpus.jsonl, train.jsonl, dev.jsonl, dev_qrels.tsv and topics.tsv
/// (passage_id<TAB>topic<TAB>subtopic) under `dir`, which is created if needed.
void write_dataset(const std::string& dir, const SynthDataset& data);

}  // namespace drboost
