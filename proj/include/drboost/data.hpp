#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace drboost {

struct Passage {
  std::string id;
  std::string title;
  std::string text;

  /// The string handed to the featurizer: title and text joined by a space.
  std::string full_text() const { return title + " " + text; }

  friend bool operator==(const Passage&, const Passage&) = default;
};

/// Insertion-ordered passage store with id lookup. Immutable once loaded.
class Corpus {
 public:
  Corpus() = default;

  /// Throws ValidationError on an empty or duplicate id, or when both title
  /// and text are empty.
  void add(Passage passage);

  std::size_t size() const { return passages_.size(); }
  bool empty() const { return passages_.empty(); }
  const Passage& operator[](std::size_t row) const { return passages_[row]; }
  const std::vector<Passage>& passages() const { return passages_; }

  std::optional<std::size_t> find(const std::string& id) const;
  /// Like find but throws ValidationError naming the id.
  std::size_t row_of(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id).has_value(); }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.passages_ == b.passages_;
  }

 private:
  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> rows_;
};

struct TrainPair {
  std::string query_id;
  std::string query_text;
  std::vector<std::string> positive_ids;

  friend bool operator==(const TrainPair&, const TrainPair&) = default;
};

/// A training pair plus sampled negatives. Only constructible through
/// make_augmented, which enforces that negatives and positives are disjoint.
class AugmentedExample {
 public:
  const TrainPair& pair() const { return pair_; }
  const std::vector<std::string>& negative_ids() const { return negatives_; }

 private:
  friend AugmentedExample make_augmented(TrainPair pair,
                                         std::vector<std::string> negatives);
  AugmentedExample(TrainPair pair, std::vector<std::string> negatives)
      : pair_(std::move(pair)), negatives_(std::move(negatives)) {}

  TrainPair pair_;
  std::vector<std::string> negatives_;
};

/// Throws ValidationError when negatives is empty or intersects positives.
AugmentedExample make_augmented(TrainPair pair,
                                std::vector<std::string> negatives);

/// query_id -> (passage_id -> graded relevance >= 1)
using Qrels = std::map<std::string, std::map<std::string, int>>;

// JSON-lines ingestion. Errors carry the 1-based line number.
Corpus load_corpus(const std::string& path);
void save_corpus(const std::string& path, const Corpus& corpus);
std::string corpus_line(const Passage& passage);

std::vector<TrainPair> load_train_pairs(const std::string& path,
                                        const Corpus& corpus);
/// Same parser without the corpus cross-check.
std::vector<TrainPair> load_train_pairs(const std::string& path);
void save_train_pairs(const std::string& path,
                      const std::vector<TrainPair>& pairs);

Qrels load_qrels(const std::string& path);
void save_qrels(const std::string& path, const Qrels& qrels);
/// Binary qrels (relevance 1) derived from positive_ids.
Qrels qrels_from_pairs(const std::vector<TrainPair>& pairs);

/// Deterministic disjoint partition. fraction must lie in (0, 1). Both parts
/// keep the input's relative order.
std::pair<std::vector<TrainPair>, std::vector<TrainPair>> split_dev(
    const std::vector<TrainPair>& pairs, double fraction, std::uint64_t seed);

}  // namespace drboost
