#include "drboost/featurizer.hpp"

#include <algorithm>

#include "drboost/common.hpp"

namespace drboost {

void FeaturizerConfig::validate() const {
  if (num_buckets < 2 || (num_buckets & (num_buckets - 1)) != 0)
    throw ArgumentError("num_buckets must be a power of two >= 2, got " +
                        std::to_string(num_buckets));
}

namespace {
bool word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}
}  // namespace

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !word_byte(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && word_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) {
      std::string tok(text.substr(start, i - start));
      if (lowercase) {
        for (char& c : tok)
          if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      }
      tokens.push_back(std::move(tok));
    }
  }
  return tokens;
}

std::uint32_t term_bucket(std::string_view term, const FeaturizerConfig& config) {
  const std::uint64_t h = fnv1a64(term, kFnvOffset ^ config.hash_seed);
  return static_cast<std::uint32_t>(h & (config.num_buckets - 1));
}

SparseFeatures featurize(std::string_view text, const FeaturizerConfig& config) {
  config.validate();
  const auto tokens = tokenize(text, config.lowercase);
  std::vector<std::uint32_t> buckets;
  buckets.reserve(tokens.size() * 2);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    buckets.push_back(term_bucket(tokens[i], config));
    if (config.use_bigrams && i + 1 < tokens.size()) {
      std::string bigram = tokens[i];
      bigram += '\x1f';
      bigram += tokens[i + 1];
      buckets.push_back(term_bucket(bigram, config));
    }
  }
  std::sort(buckets.begin(), buckets.end());
  SparseFeatures out;
  for (std::size_t i = 0; i < buckets.size();) {
    std::size_t j = i;
    while (j < buckets.size() && buckets[j] == buckets[i]) ++j;
    out.indices.push_back(buckets[i]);
    out.values.push_back(static_cast<float>(j - i));
    i = j;
  }
  return out;
}

}  // namespace drboost
