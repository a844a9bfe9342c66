#include "drboost/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "drboost/common.hpp"

namespace drboost {

void SynthConfig::validate() const {
  if (num_topics < 1 || passages_per_topic < 1 || vocab_size < 1 ||
      words_per_passage < 1 || queries_per_topic < 1 || query_len < 1)
    throw ArgumentError("synth: all sizes must be positive");
  if (!(noise_rate >= 0.0 && noise_rate < 1.0))
    throw ArgumentError("synth: noise_rate must lie in [0, 1)");
  if (!(zipf_exponent >= 0.0)) throw ArgumentError("synth: zipf_exponent must be >= 0");
  if (queries_per_topic > passages_per_topic)
    throw ArgumentError("synth: queries_per_topic exceeds passages_per_topic");
  if (query_len > words_per_passage)
    throw ArgumentError("synth: query_len exceeds words_per_passage");
  if (subtopics_per_topic < 1 || subtopics_per_topic > passages_per_topic)
    throw ArgumentError("synth: subtopics_per_topic must lie in [1, passages_per_topic]");
  if (!(subtopic_rate >= 0.0 && subtopic_rate <= 1.0))
    throw ArgumentError("synth: subtopic_rate must lie in [0, 1]");
  const int noise = vocab_size / (num_topics + 1);
  const int slice = (vocab_size - noise) / num_topics;
  if (leaves_per_subtopic < 1) throw ArgumentError("synth: leaves_per_subtopic must be >= 1");
  if (!(leaf_rate >= 0.0 && leaf_rate <= 1.0))
    throw ArgumentError("synth: leaf_rate must lie in [0, 1]");
  const int chunk = (slice - slice / 2) / subtopics_per_topic;
  if (noise < 1 || slice / 2 < 1 || chunk < 1 ||
      (leaves_per_subtopic > 1 && (chunk / 2 < 1 || (chunk - chunk / 2) / leaves_per_subtopic < 1)))
    throw ArgumentError("synth: vocab_size " + std::to_string(vocab_size) +
                        " too small for " + std::to_string(num_topics) + " topics");
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0))
    throw ArgumentError("synth: dev_fraction must lie in (0, 1)");
}

namespace {

class ZipfSampler {
 public:
  ZipfSampler(int n, double exponent) : cdf_(static_cast<std::size_t>(n)) {
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      total += 1.0 / std::pow(static_cast<double>(k + 1), exponent);
      cdf_[static_cast<std::size_t>(k)] = total;
    }
    for (double& c : cdf_) c /= total;
  }
  int operator()(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<int>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

std::string topic_word(int topic, int rank) {
  return "t" + std::to_string(topic) + "w" + std::to_string(rank);
}

std::string subtopic_word(int topic, int sub, int rank) {
  return "t" + std::to_string(topic) + "s" + std::to_string(sub) + "w" + std::to_string(rank);
}

std::string noise_word(int rank) { return "n" + std::to_string(rank); }

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string padded(const char* prefix, std::size_t value, int width) {
  std::string digits = std::to_string(value);
  if (static_cast<int>(digits.size()) < width)
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const int noise_size = cfg.vocab_size / (cfg.num_topics + 1);
  const int slice_size = (cfg.vocab_size - noise_size) / cfg.num_topics;
  const int general_size = slice_size / 2;
  const int chunk_size = (slice_size - general_size) / cfg.subtopics_per_topic;
  const bool leaves = cfg.leaves_per_subtopic > 1;
  const int sub_size = leaves ? chunk_size / 2 : chunk_size;
  const int leaf_size = leaves ? (chunk_size - sub_size) / cfg.leaves_per_subtopic : 1;
  const ZipfSampler topic_zipf(general_size, cfg.zipf_exponent);
  const ZipfSampler sub_zipf(sub_size, cfg.zipf_exponent);
  const ZipfSampler leaf_zipf(leaf_size, cfg.zipf_exponent);
  const ZipfSampler noise_zipf(noise_size, cfg.zipf_exponent);

  SynthDataset data;
  const std::size_t total =
      static_cast<std::size_t>(cfg.num_topics) * static_cast<std::size_t>(cfg.passages_per_topic);
  const int id_width = static_cast<int>(std::to_string(total).size());
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(total);

  Rng corpus_rng(mix_seed(cfg.seed, 1));
  for (int t = 0; t < cfg.num_topics; ++t) {
    for (int j = 0; j < cfg.passages_per_topic; ++j) {
      const int sub = j % cfg.subtopics_per_topic;
      const int leaf = (j / cfg.subtopics_per_topic) % cfg.leaves_per_subtopic;
      std::vector<std::string> words;
      words.reserve(static_cast<std::size_t>(cfg.words_per_passage));
      for (int w = 0; w < cfg.words_per_passage; ++w) {
        if (corpus_rng.uniform() < cfg.noise_rate)
          words.push_back(noise_word(noise_zipf(corpus_rng)));
        else if (leaves && corpus_rng.uniform() < cfg.leaf_rate)
          words.push_back(subtopic_word(t, sub, 0) + "l" + std::to_string(leaf) + "r" +
                          std::to_string(leaf_zipf(corpus_rng)));
        else if (corpus_rng.uniform() < cfg.subtopic_rate)
          words.push_back(subtopic_word(t, sub, sub_zipf(corpus_rng)));
        else
          words.push_back(topic_word(t, topic_zipf(corpus_rng)));
      }
      data.corpus.add({padded("p", tokens.size(), id_width), "", join(words)});
      data.topic_of_passage.push_back(t);
      data.subtopic_of_passage.push_back(sub);
      tokens.push_back(std::move(words));
    }
  }

  Rng query_rng(mix_seed(cfg.seed, 2));
  std::vector<TrainPair> queries;
  const std::size_t num_queries =
      static_cast<std::size_t>(cfg.num_topics) * static_cast<std::size_t>(cfg.queries_per_topic);
  const int q_width = static_cast<int>(std::to_string(num_queries).size());
  for (int t = 0; t < cfg.num_topics; ++t) {
    std::vector<std::size_t> members(static_cast<std::size_t>(cfg.passages_per_topic));
    for (std::size_t j = 0; j < members.size(); ++j)
      members[j] = static_cast<std::size_t>(t) * members.size() + j;
    query_rng.shuffle(members);
    for (int qi = 0; qi < cfg.queries_per_topic; ++qi) {
      const std::size_t gold = members[static_cast<std::size_t>(qi)];
      std::vector<std::size_t> positions(tokens[gold].size());
      for (std::size_t p = 0; p < positions.size(); ++p) positions[p] = p;
      query_rng.shuffle(positions);
      std::vector<std::string> words;
      for (int w = 0; w < cfg.query_len; ++w) {
        if (query_rng.uniform() < cfg.noise_rate)
          words.push_back(noise_word(noise_zipf(query_rng)));
        else
          words.push_back(tokens[gold][positions[static_cast<std::size_t>(w)]]);
      }
      queries.push_back({padded("q", queries.size(), q_width), join(words),
                         {data.corpus[gold].id}});
    }
  }

  auto [train, dev] = split_dev(queries, cfg.dev_fraction, mix_seed(cfg.seed, 3));
  data.train = std::move(train);
  data.dev = std::move(dev);
  return data;
}

void write_dataset(const std::string& dir, const SynthDataset& data) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  save_corpus((root / "corpus.jsonl").string(), data.corpus);
  save_train_pairs((root / "train.jsonl").string(), data.train);
  save_train_pairs((root / "dev.jsonl").string(), data.dev);
  save_qrels((root / "dev_qrels.tsv").string(), qrels_from_pairs(data.dev));
  std::ofstream topics(root / "topics.tsv", std::ios::binary);
  if (!topics) throw IoError("cannot write " + (root / "topics.tsv").string());
  for (std::size_t i = 0; i < data.corpus.size(); ++i)
    topics << data.corpus[i].id << '\t' << data.topic_of_passage[i] << '\t'
           << data.subtopic_of_passage[i] << '\n';
}

}  // namespace drboost
