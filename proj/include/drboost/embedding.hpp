#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace drboost {

/// Row-major float32 matrix of corpus-side vectors; row_ids align with rows.
struct EmbeddingMatrix {
  std::size_t num_rows = 0;
  std::size_t dim = 0;
  std::vector<float> data;
  std::vector<std::string> row_ids;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t d)
      : num_rows(rows), dim(d), data(rows * d, 0.0f), row_ids(rows) {}

  std::span<float> row(std::size_t i) { return {data.data() + i * dim, dim}; }
  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }

  /// Throws ValidationError on shape mismatch or non-finite entries.
  void validate() const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

double dot(std::span<const float> a, std::span<const float> b);
double squared_l2(std::span<const float> a, std::span<const float> b);
double norm(std::span<const float> a);

/// Column-wise concatenation; all inputs must have equal num_rows.
EmbeddingMatrix concat_columns(const std::vector<const EmbeddingMatrix*>& parts);

}  // namespace drboost
