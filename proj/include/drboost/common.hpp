#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace drboost {

// Error hierarchy. Every failure surfaced by the library is one of these, so
// callers (the CLI in particular) can map them onto exit codes uniformly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad JSON, bad TSV field, truncated binary file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that breaks a domain invariant (duplicate id, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Caller passed an argument outside the documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or degenerate numeric values.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Optimisation diverged.
class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Randomness
//
// std::*_distribution output is implementation defined, so everything that
// must be reproducible draws through this wrapper instead.

/// splitmix64 finaliser; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller, one value per call).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_[4];
};

// ---------------------------------------------------------------------------
// Threading

/// Worker cap for parallel_for. 0 means "not set": falls back to the
/// DRBOOST_THREADS environment variable, then to 1.
void set_num_threads(int n);
int num_threads();

/// Runs fn(begin, end) over a static partition of [0, n). Callers must only
/// write to state owned by their own indices; the partition never affects
/// results.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Hashing

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t state = kFnvOffset) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

/// FNV-1a 64 of a whole file, as 16 lowercase hex digits.
std::string hash_file(const std::string& path);

// ---------------------------------------------------------------------------
// Logging

void log_info(const std::string& message);
void set_quiet(bool quiet);

}  // namespace drboost
