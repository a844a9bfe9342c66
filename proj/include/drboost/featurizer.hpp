#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace drboost {

struct FeaturizerConfig {
  std::uint32_t num_buckets = 1u << 18;
  bool use_bigrams = true;
  bool lowercase = true;
  std::uint64_t hash_seed = 0;

  /// Throws ArgumentError unless num_buckets is a power of two >= 2.
  void validate() const;

  friend bool operator==(const FeaturizerConfig&,
                         const FeaturizerConfig&) = default;
};

/// Hashed term counts. indices strictly increasing, values > 0.
struct SparseFeatures {
  std::vector<std::uint32_t> indices;
  std::vector<float> values;

  std::size_t nnz() const { return indices.size(); }
  bool empty() const { return indices.empty(); }

  friend bool operator==(const SparseFeatures&, const SparseFeatures&) = default;
};

/// Maximal runs of ASCII letters/digits; bytes >= 0x80 count as word
/// characters so UTF-8 sequences stay inside their token.
std::vector<std::string> tokenize(std::string_view text, bool lowercase);

/// Bucket of one term (a unigram, or "a\x1fb" for a bigram).
std::uint32_t term_bucket(std::string_view term, const FeaturizerConfig& config);

/// Unigrams plus adjacent-token bigrams (if enabled), hashed with seeded
/// FNV-1a 64 and masked to num_buckets - 1. Collisions add up.
SparseFeatures featurize(std::string_view text, const FeaturizerConfig& config);

}  // namespace drboost
