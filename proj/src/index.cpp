#include "drboost/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "drboost/binary_io.hpp"
#include "drboost/common.hpp"

namespace drboost {

namespace {

constexpr std::uint32_t kIndexVersion = 1;

bool better(const std::pair<double, std::size_t>& a,
            const std::pair<double, std::size_t>& b) {
  if (a.first != b.first) return a.first > b.first;
  return a.second < b.second;
}

void check_query(std::size_t expected, std::size_t got, std::size_t k) {
  if (expected != got)
    throw ArgumentError("query dim " + std::to_string(got) + " != index dim " +
                        std::to_string(expected));
  if (k == 0) throw ArgumentError("k must be >= 1");
}

}  // namespace

SearchResult top_k(std::vector<std::pair<double, std::size_t>> candidates,
                   std::size_t k, const std::vector<std::string>& row_ids) {
  if (k < candidates.size()) {
    std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                     candidates.end(), better);
    candidates.resize(k);
  }
  std::sort(candidates.begin(), candidates.end(), better);
  SearchResult out;
  out.entries.reserve(candidates.size());
  for (const auto& [s, row] : candidates)
    out.entries.push_back({row, row < row_ids.size() ? row_ids[row] : std::string(), s});
  return out;
}

SearchResult exact_search(const EmbeddingMatrix& matrix,
                          std::span<const float> query, std::size_t k) {
  check_query(matrix.dim, query.size(), k);
  std::vector<std::pair<double, std::size_t>> cands(matrix.num_rows);
  for (std::size_t i = 0; i < matrix.num_rows; ++i) cands[i] = {dot(matrix.row(i), query), i};
  return top_k(std::move(cands), k, matrix.row_ids);
}

std::vector<SearchResult> exact_search_all(const EmbeddingMatrix& matrix,
                                           const EmbeddingMatrix& queries,
                                           std::size_t k) {
  std::vector<SearchResult> out(queries.num_rows);
  parallel_for(queries.num_rows, [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q) out[q] = exact_search(matrix, queries.row(q), k);
  });
  return out;
}

// ---------------------------------------------------------------------------

std::uint32_t nearest_centroid(std::span<const float> x,
                               std::span<const float> centroids, std::size_t k,
                               std::size_t dim) {
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const double d = squared_l2(x, centroids.subspan(c * dim, dim));
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

namespace {

std::vector<float> kmeanspp_seed(const EmbeddingMatrix& m, std::size_t k, Rng& rng) {
  const std::size_t n = m.num_rows, d = m.dim;
  std::vector<float> centroids(k * d);
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t pick = static_cast<std::size_t>(rng.below(n));
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
      if (total > 0.0) {
        const double r = rng.uniform() * total;
        double acc = 0.0;
        pick = n;
        std::size_t last_positive = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (chosen[i] || d2[i] <= 0.0) continue;
          last_positive = i;
          acc += d2[i];
          if (acc > r) {
            pick = i;
            break;
          }
        }
        if (pick == n) pick = last_positive;
      } else {
        // Every remaining row duplicates a centroid: pick uniformly among them.
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n; ++i)
          if (!chosen[i]) rest.push_back(i);
        pick = rest[static_cast<std::size_t>(rng.below(rest.size()))];
      }
    }
    chosen[pick] = true;
    const auto src = m.row(pick);
    std::copy(src.begin(), src.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
    const std::span<const float> cent(centroids.data() + c * d, d);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) d2[i] = std::min(d2[i], squared_l2(m.row(i), cent));
    });
  }
  return centroids;
}

double assign_rows(const EmbeddingMatrix& m, const std::vector<float>& centroids,
                   std::size_t k, std::vector<std::uint32_t>& assignment,
                   std::vector<double>& dists) {
  const std::size_t n = m.num_rows, d = m.dim;
  assignment.resize(n);
  dists.resize(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto c = nearest_centroid(m.row(i), centroids, k, d);
      assignment[i] = c;
      dists[i] = squared_l2(m.row(i), std::span<const float>(centroids.data() + c * d, d));
    }
  });
  double total = 0.0;
  for (double v : dists) total += v;
  return total;
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& matrix, std::size_t k, int iters,
                    std::uint64_t seed) {
  if (k == 0) throw ArgumentError("kmeans: k must be >= 1");
  if (k > matrix.num_rows)
    throw ArgumentError("kmeans: k = " + std::to_string(k) + " exceeds " +
                        std::to_string(matrix.num_rows) + " rows");
  const std::size_t n = matrix.num_rows, d = matrix.dim;
  Rng rng(seed);

  KMeansResult res;
  res.k = k;
  res.dim = d;
  res.centroids = kmeanspp_seed(matrix, k, rng);

  std::vector<std::uint32_t> assign, prev;
  std::vector<double> dists;
  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);

  for (int it = 0; it < iters; ++it) {
    res.distortion.push_back(assign_rows(matrix, res.centroids, k, assign, dists));
    if (it > 0 && assign == prev) break;
    res.iterations = it + 1;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assign[i];
      ++counts[c];
      const auto x = matrix.row(i);
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += x[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j)
        res.centroids[c * d + j] = static_cast<float>(sums[c * d + j] / static_cast<double>(counts[c]));
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      const std::size_t largest = static_cast<std::size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != largest) continue;
        const double dd = squared_l2(matrix.row(i), res.centroid(largest));
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      const auto x = matrix.row(far);
      std::copy(x.begin(), x.end(), res.centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
      assign[far] = static_cast<std::uint32_t>(c);
      --counts[largest];
      counts[c] = 1;
    }
    prev = assign;
  }
  res.distortion.push_back(assign_rows(matrix, res.centroids, k, res.assignment, dists));
  return res;
}

// ---------------------------------------------------------------------------

std::size_t default_ivf_lists(std::size_t num_rows) {
  const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(num_rows))));
  return std::max<std::size_t>(1, k);
}

IVFIndex build_ivf(const EmbeddingMatrix& matrix, std::size_t k, int iters,
                   std::uint64_t seed) {
  if (k == 0) k = default_ivf_lists(matrix.num_rows);
  auto km = kmeans(matrix, k, iters, seed);
  IVFIndex idx;
  idx.k = k;
  idx.dim = matrix.dim;
  idx.centroids = std::move(km.centroids);
  idx.lists.assign(k, {});
  for (std::size_t i = 0; i < matrix.num_rows; ++i)
    idx.lists[km.assignment[i]].push_back(static_cast<std::uint32_t>(i));
  return idx;
}

SearchResult ivf_search(const IVFIndex& index, const EmbeddingMatrix& matrix,
                        std::span<const float> query, std::size_t k,
                        std::size_t n_probes) {
  check_query(index.dim, query.size(), k);
  if (n_probes < 1 || n_probes > index.k)
    throw ArgumentError("n_probes must lie in [1, " + std::to_string(index.k) + "]");
  std::vector<std::pair<double, std::size_t>> cent(index.k);
  for (std::size_t c = 0; c < index.k; ++c) cent[c] = {dot(index.centroid(c), query), c};
  std::partial_sort(cent.begin(), cent.begin() + static_cast<std::ptrdiff_t>(n_probes),
                    cent.end(), better);
  std::vector<std::pair<double, std::size_t>> cands;
  for (std::size_t p = 0; p < n_probes; ++p)
    for (std::uint32_t row : index.lists[cent[p].second])
      cands.emplace_back(dot(matrix.row(row), query), row);
  return top_k(std::move(cands), k, matrix.row_ids);
}

// ---------------------------------------------------------------------------

PQIndex build_pq(const EmbeddingMatrix& matrix, std::size_t sub_dim,
                 std::uint64_t seed, int iters) {
  if (sub_dim == 0 || matrix.dim % sub_dim != 0)
    throw ArgumentError("pq: dim " + std::to_string(matrix.dim) +
                        " is not divisible by sub_dim " + std::to_string(sub_dim));
  if (matrix.num_rows == 0) throw ArgumentError("pq: empty matrix");
  PQIndex pq;
  pq.num_rows = matrix.num_rows;
  pq.dim = matrix.dim;
  pq.sub_dim = sub_dim;
  pq.num_subspaces = matrix.dim / sub_dim;
  pq.ksub = std::min<std::size_t>(256, matrix.num_rows);
  pq.row_ids = matrix.row_ids;
  pq.codebooks.assign(pq.num_subspaces * pq.ksub * sub_dim, 0.0f);
  pq.codes.assign(pq.num_rows * pq.num_subspaces, 0);

  for (std::size_t m = 0; m < pq.num_subspaces; ++m) {
    EmbeddingMatrix sub(matrix.num_rows, sub_dim);
    for (std::size_t i = 0; i < matrix.num_rows; ++i) {
      const auto src = matrix.row(i).subspan(m * sub_dim, sub_dim);
      std::copy(src.begin(), src.end(), sub.row(i).begin());
    }
    const auto km = kmeans(sub, pq.ksub, iters, mix_seed(seed, m));
    std::copy(km.centroids.begin(), km.centroids.end(),
              pq.codebooks.begin() + static_cast<std::ptrdiff_t>(m * pq.ksub * sub_dim));
    for (std::size_t i = 0; i < matrix.num_rows; ++i)
      pq.codes[i * pq.num_subspaces + m] = static_cast<std::uint8_t>(km.assignment[i]);
  }
  return pq;
}

std::vector<float> pq_reconstruct(const PQIndex& index, std::size_t row) {
  std::vector<float> out(index.dim);
  const auto code = index.code(row);
  for (std::size_t m = 0; m < index.num_subspaces; ++m) {
    const auto cw = index.codeword(m, code[m]);
    std::copy(cw.begin(), cw.end(), out.begin() + static_cast<std::ptrdiff_t>(m * index.sub_dim));
  }
  return out;
}

double pq_reconstruction_mse(const PQIndex& index, const EmbeddingMatrix& matrix) {
  if (matrix.num_rows != index.num_rows || matrix.dim != index.dim)
    throw ArgumentError("pq_reconstruction_mse: shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < index.num_rows; ++i)
    total += squared_l2(matrix.row(i), pq_reconstruct(index, i));
  return index.num_rows ? total / static_cast<double>(index.num_rows) : 0.0;
}

SearchResult pq_search(const PQIndex& index, std::span<const float> query,
                       std::size_t k) {
  check_query(index.dim, query.size(), k);
  const std::size_t M = index.num_subspaces, ks = index.ksub;
  std::vector<double> lut(M * ks);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t c = 0; c < ks; ++c)
      lut[m * ks + c] = dot(query.subspan(m * index.sub_dim, index.sub_dim), index.codeword(m, c));
  std::vector<std::pair<double, std::size_t>> cands(index.num_rows);
  for (std::size_t i = 0; i < index.num_rows; ++i) {
    const auto code = index.code(i);
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) s += lut[m * ks + code[m]];
    cands[i] = {s, i};
  }
  return top_k(std::move(cands), k, index.row_ids);
}

// ---------------------------------------------------------------------------

const char* index_type_name(IndexType type) {
  switch (type) {
    case IndexType::kExact: return "exact";
    case IndexType::kIvf: return "ivf";
    case IndexType::kPq: return "pq";
  }
  return "unknown";
}

IndexType parse_index_type(const std::string& name) {
  if (name == "exact") return IndexType::kExact;
  if (name == "ivf") return IndexType::kIvf;
  if (name == "pq") return IndexType::kPq;
  throw ArgumentError("unknown index type \"" + name + "\"");
}

std::size_t IndexFile::num_rows() const {
  return type == IndexType::kPq ? pq->num_rows : matrix.num_rows;
}

std::size_t IndexFile::dim() const {
  return type == IndexType::kPq ? pq->dim : matrix.dim;
}

const std::vector<std::string>& IndexFile::row_ids() const {
  return type == IndexType::kPq ? pq->row_ids : matrix.row_ids;
}

SearchResult IndexFile::search(std::span<const float> query, std::size_t k,
                               std::size_t n_probes) const {
  switch (type) {
    case IndexType::kExact: return exact_search(matrix, query, k);
    case IndexType::kIvf:
      return ivf_search(*ivf, matrix, query, k, n_probes == 0 ? ivf->k : n_probes);
    case IndexType::kPq: return pq_search(*pq, query, k);
  }
  throw ArgumentError("bad index type");
}

namespace {

void write_matrix(BinaryWriter& w, const EmbeddingMatrix& m) {
  w.u64(m.num_rows);
  w.u32(static_cast<std::uint32_t>(m.dim));
  for (const auto& id : m.row_ids) w.str(id);
  w.f32s(m.data);
}

EmbeddingMatrix read_matrix(BinaryReader& r) {
  const std::uint64_t rows = r.u64();
  const std::uint32_t dim = r.u32();
  if (rows > (1ULL << 32) || dim > (1u << 20)) throw ParseError(r.source() + ": bad matrix shape");
  EmbeddingMatrix m(static_cast<std::size_t>(rows), dim);
  for (auto& id : m.row_ids) id = r.str();
  r.f32s(m.data);
  return m;
}

}  // namespace

void save_index(const std::string& path, const IndexFile& index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  BinaryWriter w(out);
  w.magic("DRBX");
  w.u32(kIndexVersion);
  w.u32(static_cast<std::uint32_t>(index.type));
  switch (index.type) {
    case IndexType::kExact:
      write_matrix(w, index.matrix);
      break;
    case IndexType::kIvf: {
      write_matrix(w, index.matrix);
      const auto& ivf = *index.ivf;
      w.u32(static_cast<std::uint32_t>(ivf.k));
      w.f32s(ivf.centroids);
      for (const auto& list : ivf.lists) {
        w.u32(static_cast<std::uint32_t>(list.size()));
        for (std::uint32_t row : list) w.u32(row);
      }
      break;
    }
    case IndexType::kPq: {
      const auto& pq = *index.pq;
      w.u64(pq.num_rows);
      w.u32(static_cast<std::uint32_t>(pq.dim));
      w.u32(static_cast<std::uint32_t>(pq.sub_dim));
      w.u32(static_cast<std::uint32_t>(pq.ksub));
      for (const auto& id : pq.row_ids) w.str(id);
      w.f32s(pq.codebooks);
      w.bytes(pq.codes);
      break;
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

IndexFile load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  BinaryReader r(in, path);
  r.expect_magic("DRBX");
  const std::uint32_t version = r.u32();
  if (version != kIndexVersion)
    throw ParseError(path + ": unsupported index version " + std::to_string(version));
  const std::uint32_t tag = r.u32();
  IndexFile f;
  switch (tag) {
    case 0:
      f.type = IndexType::kExact;
      f.matrix = read_matrix(r);
      break;
    case 1: {
      f.type = IndexType::kIvf;
      f.matrix = read_matrix(r);
      IVFIndex ivf;
      ivf.k = r.u32();
      ivf.dim = f.matrix.dim;
      if (ivf.k == 0 || ivf.k > f.matrix.num_rows) throw ParseError(path + ": bad list count");
      ivf.centroids.resize(ivf.k * ivf.dim);
      r.f32s(ivf.centroids);
      ivf.lists.resize(ivf.k);
      for (auto& list : ivf.lists) {
        const std::uint32_t n = r.u32();
        if (n > f.matrix.num_rows) throw ParseError(path + ": bad list length");
        list.resize(n);
        for (auto& row : list) {
          row = r.u32();
          if (row >= f.matrix.num_rows) throw ParseError(path + ": row out of range");
        }
      }
      f.ivf = std::move(ivf);
      break;
    }
    case 2: {
      f.type = IndexType::kPq;
      PQIndex pq;
      pq.num_rows = static_cast<std::size_t>(r.u64());
      pq.dim = r.u32();
      pq.sub_dim = r.u32();
      pq.ksub = r.u32();
      if (pq.sub_dim == 0 || pq.dim % pq.sub_dim != 0 || pq.ksub == 0 || pq.ksub > 256)
        throw ParseError(path + ": bad PQ header");
      pq.num_subspaces = pq.dim / pq.sub_dim;
      pq.row_ids.resize(pq.num_rows);
      for (auto& id : pq.row_ids) id = r.str();
      pq.codebooks.resize(pq.num_subspaces * pq.ksub * pq.sub_dim);
      r.f32s(pq.codebooks);
      pq.codes.resize(pq.num_rows * pq.num_subspaces);
      r.bytes(pq.codes);
      for (auto c : pq.codes)
        if (c >= pq.ksub) throw ParseError(path + ": PQ code out of range");
      f.pq = std::move(pq);
      break;
    }
    default:
      throw ParseError(path + ": unknown index type tag " + std::to_string(tag));
  }
  return f;
}

}  // namespace drboost
