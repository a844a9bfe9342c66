#include "drboost/embedding.hpp"

#include <cmath>

#include "drboost/common.hpp"

namespace drboost {

void EmbeddingMatrix::validate() const {
  if (data.size() != num_rows * dim)
    throw ValidationError("embedding matrix data length != rows x dim");
  if (row_ids.size() != num_rows)
    throw ValidationError("embedding matrix row_ids length != rows");
  for (float v : data)
    if (!std::isfinite(v)) throw ValidationError("embedding matrix has non-finite entries");
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

double squared_l2(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

EmbeddingMatrix concat_columns(const std::vector<const EmbeddingMatrix*>& parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front()->num_rows;
  std::size_t dim = 0;
  for (const auto* p : parts) {
    if (p->num_rows != rows) throw ArgumentError("concat_columns: row count mismatch");
    dim += p->dim;
  }
  EmbeddingMatrix out(rows, dim);
  out.row_ids = parts.front()->row_ids;
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t offset = 0;
    auto dst = out.row(r);
    for (const auto* p : parts) {
      const auto src = p->row(r);
      std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += p->dim;
    }
  }
  return out;
}

}  // namespace drboost
