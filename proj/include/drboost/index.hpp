#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drboost/embedding.hpp"

namespace drboost {

struct SearchHit {
  std::size_t row = 0;
  std::string passage_id;
  double score = 0.0;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Ranked hits, descending score; equal scores ordered by ascending row.
struct SearchResult {
  std::vector<SearchHit> entries;

  std::size_t size() const { return entries.size(); }
  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

/// Keeps the k best (score, row) candidates under the global tie-break rule
/// and materialises them as a SearchResult.
SearchResult top_k(std::vector<std::pair<double, std::size_t>> candidates,
                   std::size_t k, const std::vector<std::string>& row_ids);

// ---------------------------------------------------------------------------
// Exact MIPS

/// Throws ArgumentError on dimension mismatch or k == 0.
SearchResult exact_search(const EmbeddingMatrix& matrix,
                          std::span<const float> query, std::size_t k);

/// One exact search per query row, parallel over queries.
std::vector<SearchResult> exact_search_all(const EmbeddingMatrix& matrix,
                                           const EmbeddingMatrix& queries,
                                           std::size_t k);

// ---------------------------------------------------------------------------
// k-means (Lloyd, k-means++ seeding)

struct KMeansResult {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;           // k x dim
  std::vector<std::uint32_t> assignment;  // nearest centroid per row (L2)
  /// Sum of squared distances after each assignment step.
  std::vector<double> distortion;
  int iterations = 0;

  std::span<const float> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
};

/// Runs at most `iters` Lloyd iterations, stopping early once assignments
/// are stable. Empty clusters are re-seeded with the point of the largest
/// cluster farthest from its centroid. Throws ArgumentError if
/// k > num_rows or k == 0.
KMeansResult kmeans(const EmbeddingMatrix& matrix, std::size_t k, int iters,
                    std::uint64_t seed);

/// Index of the nearest (L2) centroid; ties go to the lower index.
std::uint32_t nearest_centroid(std::span<const float> x,
                               std::span<const float> centroids,
                               std::size_t k, std::size_t dim);

// ---------------------------------------------------------------------------
// IVF

struct IVFIndex {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;                   // k x dim
  std::vector<std::vector<std::uint32_t>> lists;  // row indices, ascending

  std::span<const float> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
  friend bool operator==(const IVFIndex&, const IVFIndex&) = default;
};

/// Default list count: round(sqrt(num_rows)), at least 1.
std::size_t default_ivf_lists(std::size_t num_rows);

/// k == 0 selects default_ivf_lists.
IVFIndex build_ivf(const EmbeddingMatrix& matrix, std::size_t k, int iters,
                   std::uint64_t seed);

/// Probes the n_probes centroids with the highest inner product with the
/// query and scans their lists exactly.
SearchResult ivf_search(const IVFIndex& index, const EmbeddingMatrix& matrix,
                        std::span<const float> query, std::size_t k,
                        std::size_t n_probes);

// ---------------------------------------------------------------------------
// Product quantisation

struct PQIndex {
  std::size_t num_rows = 0;
  std::size_t dim = 0;
  std::size_t sub_dim = 4;
  std::size_t num_subspaces = 0;
  std::size_t ksub = 256;       // centroids per subspace (< 256 only for tiny inputs)
  std::vector<float> codebooks;  // num_subspaces x ksub x sub_dim
  std::vector<std::uint8_t> codes;  // num_rows x num_subspaces
  std::vector<std::string> row_ids;

  std::span<const float> codeword(std::size_t m, std::size_t c) const {
    return {codebooks.data() + (m * ksub + c) * sub_dim, sub_dim};
  }
  std::span<const std::uint8_t> code(std::size_t row) const {
    return {codes.data() + row * num_subspaces, num_subspaces};
  }
  std::size_t code_bytes_per_vector() const { return num_subspaces; }
  std::size_t codebook_bytes() const { return codebooks.size() * sizeof(float); }

  friend bool operator==(const PQIndex&, const PQIndex&) = default;
};

/// Throws ArgumentError unless dim % sub_dim == 0.
PQIndex build_pq(const EmbeddingMatrix& matrix, std::size_t sub_dim,
                 std::uint64_t seed, int iters = 20);

std::vector<float> pq_reconstruct(const PQIndex& index, std::size_t row);

/// Mean over rows of ||x - reconstruct(x)||^2.
double pq_reconstruction_mse(const PQIndex& index, const EmbeddingMatrix& matrix);

/// Asymmetric scoring: per-subspace lookup tables of query . codeword.
SearchResult pq_search(const PQIndex& index, std::span<const float> query,
                       std::size_t k);

// ---------------------------------------------------------------------------
// Index file: "DRBX", u32 version, u32 type tag, then a type-specific body.

enum class IndexType : std::uint32_t { kExact = 0, kIvf = 1, kPq = 2 };

const char* index_type_name(IndexType type);
IndexType parse_index_type(const std::string& name);

struct IndexFile {
  IndexType type = IndexType::kExact;
  EmbeddingMatrix matrix;  // kExact and kIvf
  std::optional<IVFIndex> ivf;
  std::optional<PQIndex> pq;

  std::size_t num_rows() const;
  std::size_t dim() const;
  const std::vector<std::string>& row_ids() const;

  /// Dispatches on type. n_probes is only used by IVF (0 = probe all).
  SearchResult search(std::span<const float> query, std::size_t k,
                      std::size_t n_probes = 0) const;
};

void save_index(const std::string& path, const IndexFile& index);
IndexFile load_index(const std::string& path);

}  // namespace drboost
