#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "drboost/common.hpp"
#include "drboost/index.hpp"
#include "drboost/metrics.hpp"
#include "test_util.hpp"

using namespace drboost;

namespace {

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  EmbeddingMatrix m(rows, dim);
  Rng rng(seed);
  for (auto& x : m.data) x = static_cast<float>(rng.normal());
  for (std::size_t i = 0; i < rows; ++i) m.row_ids[i] = "r" + std::to_string(i);
  return m;
}

std::vector<float> random_vector(std::size_t dim, Rng& rng) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

// Two tight Gaussian blobs in 2-d, centred at (-5, 0) and (5, 0).
EmbeddingMatrix blobs(std::size_t per_blob, std::uint64_t seed) {
  EmbeddingMatrix m(2 * per_blob, 2);
  Rng rng(seed);
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    m.row(i)[0] = static_cast<float>((i < per_blob ? -5.0 : 5.0) + 0.3 * rng.normal());
    m.row(i)[1] = static_cast<float>(0.3 * rng.normal());
    m.row_ids[i] = "b" + std::to_string(i);
  }
  return m;
}

}  // namespace

TEST(ExactSearch, FindsTheQueryRowAmongOrthogonalRows) {
  EmbeddingMatrix m(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    m.row(i)[i] = 1.0f;
    m.row_ids[i] = "e" + std::to_string(i);
  }
  const std::vector<float> q{0.0f, 0.0f, 1.0f, 0.0f};
  const auto r = exact_search(m, q, 1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.entries[0].passage_id, "e2");
  EXPECT_EQ(r.entries[0].score, 1.0);
}

TEST(ExactSearch, LargeKReturnsAllRowsSorted) {
  const auto m = random_matrix(30, 5, 1);
  Rng rng(2);
  const auto r = exact_search(m, random_vector(5, rng), 100);
  ASSERT_EQ(r.size(), 30u);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(r.entries[i - 1].score, r.entries[i].score);
}

TEST(ExactSearch, MatchesStraightforwardRescan) {
  const auto m = random_matrix(100, 8, 3);
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto q = random_vector(8, rng);
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < 100; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 8; ++j) s += static_cast<double>(q[j]) * m.row(i)[j];
      all.push_back({s, i});
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const auto r = exact_search(m, q, 10);
    for (std::size_t i = 0; i < 10; ++i) {
      EXPECT_EQ(r.entries[i].row, all[i].second);
      EXPECT_NEAR(r.entries[i].score, all[i].first, 1e-9);
    }
  }
}

TEST(ExactSearch, TiesBreakByAscendingRow) {
  EmbeddingMatrix m(5, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    m.row(i)[0] = 1.0f;
    m.row_ids[i] = std::to_string(i);
  }
  const std::vector<float> q{1.0f, 0.0f};
  const auto r = exact_search(m, q, 3);
  EXPECT_EQ(r.entries[0].row, 0u);
  EXPECT_EQ(r.entries[1].row, 1u);
  EXPECT_EQ(r.entries[2].row, 2u);
}

TEST(ExactSearch, RejectsBadArguments) {
  const auto m = random_matrix(10, 4, 1);
  const std::vector<float> q(3, 1.0f);
  EXPECT_THROW(exact_search(m, q, 1), ArgumentError);
  const std::vector<float> ok(4, 1.0f);
  EXPECT_THROW(exact_search(m, ok, 0), ArgumentError);
}

TEST(KMeans, SingleClusterIsTheColumnMean) {
  const auto m = random_matrix(50, 3, 5);
  const auto km = kmeans(m, 1, 10, 1);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 50; ++i) mean += m.row(i)[j];
    EXPECT_NEAR(km.centroid(0)[j], mean / 50.0, 1e-5);
  }
}

TEST(KMeans, KEqualsRowsHasZeroDistortion) {
  const auto m = random_matrix(12, 3, 6);
  const auto km = kmeans(m, 12, 10, 1);
  EXPECT_NEAR(km.distortion.back(), 0.0, 1e-9);
  std::set<std::uint32_t> used(km.assignment.begin(), km.assignment.end());
  EXPECT_EQ(used.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_EQ(km.centroid(km.assignment[i])[j], m.row(i)[j]);
}

TEST(KMeans, RecoversBlobMeans) {
  const auto m = blobs(200, 7);
  const auto km = kmeans(m, 2, 20, 3);
  std::vector<double> xs{km.centroid(0)[0], km.centroid(1)[0]};
  std::sort(xs.begin(), xs.end());
  EXPECT_NEAR(xs[0], -5.0, 0.1);
  EXPECT_NEAR(xs[1], 5.0, 0.1);
  EXPECT_NEAR(km.centroid(0)[1], 0.0, 0.1);
}

TEST(KMeans, DistortionNeverIncreases) {
  const auto m = random_matrix(500, 4, 8);
  const auto km = kmeans(m, 16, 30, 2);
  for (std::size_t i = 1; i < km.distortion.size(); ++i)
    EXPECT_LE(km.distortion[i], km.distortion[i - 1] * (1 + 1e-12));
  EXPECT_THROW(kmeans(m, 0, 5, 1), ArgumentError);
  EXPECT_THROW(kmeans(m, 501, 5, 1), ArgumentError);
}

TEST(Ivf, ListsPartitionRows) {
  const auto m = random_matrix(400, 6, 9);
  const auto ivf = build_ivf(m, 0, 10, 1);
  EXPECT_EQ(ivf.k, 20u);  // round(sqrt(400))
  std::vector<int> seen(400, 0);
  for (const auto& list : ivf.lists) {
    EXPECT_TRUE(std::is_sorted(list.begin(), list.end()));
    for (auto r : list) ++seen[r];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  const auto one = build_ivf(m, 1, 10, 1);
  EXPECT_EQ(one.lists.size(), 1u);
  EXPECT_EQ(one.lists[0].size(), 400u);
  EXPECT_EQ(default_ivf_lists(20000), 141u);
  EXPECT_EQ(default_ivf_lists(1), 1u);
}

TEST(Ivf, BlobRowsShareALists) {
  const auto m = blobs(100, 10);
  const auto ivf = build_ivf(m, 2, 20, 1);
  for (const auto& list : ivf.lists) {
    ASSERT_FALSE(list.empty());
    const bool left = list.front() < 100;
    for (auto r : list) EXPECT_EQ(r < 100, left);
  }
}

TEST(Ivf, FullProbeEqualsExactAndRecallIsMonotone) {
  const auto m = random_matrix(1000, 8, 11);
  const auto ivf = build_ivf(m, 0, 15, 2);
  Rng rng(12);
  EmbeddingMatrix queries(50, 8);
  for (auto& x : queries.data) x = static_cast<float>(rng.normal());
  const auto exact = exact_search_all(m, queries, 10);
  std::vector<std::size_t> probe_list;
  for (std::size_t p = 1; p < ivf.k; p *= 2) probe_list.push_back(p);
  probe_list.push_back(ivf.k);
  double previous = -1.0;
  for (std::size_t probes : probe_list) {
    std::vector<SearchResult> approx;
    for (std::size_t q = 0; q < 50; ++q)
      approx.push_back(ivf_search(ivf, m, queries.row(q), 10, probes));
    const double r = recall_vs_exact(approx, exact, 10);
    EXPECT_GE(r, previous) << probes;
    previous = r;
    if (probes == ivf.k) EXPECT_EQ(approx, exact);
  }
  EXPECT_EQ(previous, 1.0);
}

TEST(Pq, CompressionArithmetic) {
  const auto m = random_matrix(300, 160, 13);
  const auto pq = build_pq(m, 4, 1, 3);
  EXPECT_EQ(pq.num_subspaces, 40u);
  EXPECT_EQ(pq.code_bytes_per_vector(), 40u);
  EXPECT_EQ(160 * sizeof(float) / pq.code_bytes_per_vector(), 16u);
  EXPECT_EQ(pq.codes.size(), 300u * 40u);
  EXPECT_EQ(pq.codebook_bytes(), 40u * pq.ksub * 4u * sizeof(float));
  EXPECT_THROW(build_pq(m, 7, 1), ArgumentError);
}

TEST(Pq, ConstantMatrixReconstructsExactly) {
  EmbeddingMatrix m(300, 8);
  const std::vector<float> v{1.5f, -2.0f, 0.25f, 3.0f, 0.0f, -1.0f, 7.0f, 0.5f};
  for (std::size_t i = 0; i < 300; ++i) {
    std::copy(v.begin(), v.end(), m.row(i).begin());
    m.row_ids[i] = std::to_string(i);
  }
  const auto pq = build_pq(m, 4, 1);
  for (std::size_t i = 0; i < 300; i += 37) EXPECT_EQ(pq_reconstruct(pq, i), v);
  EXPECT_EQ(pq_reconstruction_mse(pq, m), 0.0);
}

TEST(Pq, ReconstructionErrorMatchesDistortionOracle) {
  const auto m = random_matrix(1000, 16, 14);
  const auto pq = build_pq(m, 4, 2);
  double total = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto code = pq.code(i);
    for (std::size_t s = 0; s < pq.num_subspaces; ++s) {
      const auto cw = pq.codeword(s, code[s]);
      for (std::size_t j = 0; j < 4; ++j) {
        const double d = static_cast<double>(m.row(i)[s * 4 + j]) - cw[j];
        total += d * d;
      }
    }
  }
  EXPECT_NEAR(pq_reconstruction_mse(pq, m), total / 1000.0, 1e-6);
}

TEST(Pq, AdcScoreIsDotWithReconstruction) {
  const auto m = random_matrix(500, 16, 15);
  const auto pq = build_pq(m, 4, 3);
  Rng rng(16);
  for (int t = 0; t < 10; ++t) {
    const auto q = random_vector(16, rng);
    const auto r = pq_search(pq, q, 20);
    for (const auto& hit : r.entries)
      EXPECT_NEAR(hit.score, dot(q, pq_reconstruct(pq, hit.row)), 1e-4);
  }
}

TEST(Pq, ExactlyRepresentableMatrixSearchesExactly) {
  // 200 rows built from 4 distinct sub-vectors per subspace: every row is a
  // codebook combination, so ADC equals exact search.
  EmbeddingMatrix m(200, 8);
  Rng rng(17);
  std::vector<std::vector<float>> atoms;
  for (int a = 0; a < 4; ++a) atoms.push_back(random_vector(4, rng));
  for (std::size_t i = 0; i < 200; ++i) {
    const auto& a = atoms[rng.below(4)];
    const auto& b = atoms[rng.below(4)];
    std::copy(a.begin(), a.end(), m.row(i).begin());
    std::copy(b.begin(), b.end(), m.row(i).begin() + 4);
    m.row_ids[i] = std::to_string(i);
  }
  const auto pq = build_pq(m, 4, 1);
  EXPECT_EQ(pq_reconstruction_mse(pq, m), 0.0);
  const auto q = random_vector(8, rng);
  const auto a = pq_search(pq, q, 15), e = exact_search(m, q, 15);
  ASSERT_EQ(a.size(), e.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.entries[i].row, e.entries[i].row);
    EXPECT_NEAR(a.entries[i].score, e.entries[i].score, 1e-5);
  }
}

TEST(IndexFile, RoundTripsEveryTypeAndDispatchesSearch) {
  drboost::testing::TempDir dir;
  const auto m = random_matrix(300, 8, 18);
  Rng rng(19);
  const auto q = random_vector(8, rng);

  IndexFile exact;
  exact.matrix = m;
  save_index(dir.file("e.drbx"), exact);
  const auto e2 = load_index(dir.file("e.drbx"));
  EXPECT_EQ(e2.type, IndexType::kExact);
  EXPECT_EQ(e2.matrix, m);
  EXPECT_EQ(e2.search(q, 5), exact_search(m, q, 5));

  IndexFile ivf;
  ivf.type = IndexType::kIvf;
  ivf.matrix = m;
  ivf.ivf = build_ivf(m, 0, 10, 1);
  save_index(dir.file("i.drbx"), ivf);
  const auto i2 = load_index(dir.file("i.drbx"));
  EXPECT_EQ(*i2.ivf, *ivf.ivf);
  EXPECT_EQ(i2.search(q, 5, 0), exact_search(m, q, 5));
  EXPECT_EQ(i2.search(q, 5, 2), ivf_search(*ivf.ivf, m, q, 5, 2));

  IndexFile pq;
  pq.type = IndexType::kPq;
  pq.pq = build_pq(m, 4, 1);
  save_index(dir.file("p.drbx"), pq);
  const auto p2 = load_index(dir.file("p.drbx"));
  EXPECT_EQ(*p2.pq, *pq.pq);
  EXPECT_EQ(p2.num_rows(), 300u);
  EXPECT_EQ(p2.dim(), 8u);
  EXPECT_EQ(p2.search(q, 5), pq_search(*pq.pq, q, 5));

  const std::string bytes = drboost::testing::read_text(dir.file("i.drbx"));
  EXPECT_EQ(bytes.substr(0, 4), "DRBX");
  drboost::testing::write_text(dir.file("cut.drbx"), bytes.substr(0, bytes.size() - 10));
  EXPECT_THROW(load_index(dir.file("cut.drbx")), ParseError);
  EXPECT_EQ(parse_index_type("pq"), IndexType::kPq);
  EXPECT_THROW(parse_index_type("hnsw"), ArgumentError);
}

TEST(IndexSearch, DeterministicAcrossThreadCounts) {
  const auto m = random_matrix(2000, 8, 20);
  EmbeddingMatrix queries = random_matrix(64, 8, 21);
  const auto a = exact_search_all(m, queries, 10);
  set_num_threads(4);
  const auto b = exact_search_all(m, queries, 10);
  const auto ivf4 = build_ivf(m, 0, 10, 1);
  const auto pq4 = build_pq(m, 4, 1, 5);
  set_num_threads(1);
  const auto ivf1 = build_ivf(m, 0, 10, 1);
  const auto pq1 = build_pq(m, 4, 1, 5);
  set_num_threads(0);
  EXPECT_EQ(a, b);
  EXPECT_EQ(ivf1, ivf4);
  EXPECT_EQ(pq1, pq4);
}
