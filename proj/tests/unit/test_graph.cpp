/* Copyright 2026 The GDC Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>

#include "gdc/blocks.hpp"
#include "gdc/error.hpp"
#include "gdc/random.hpp"
#include "gdc/sparse.hpp"
#include "oracles.hpp"

namespace gdc {
namespace {

std::vector<Edge> random_edges(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }
  return edges;
}

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (double& v : t.data()) v = 2.0 * rng.uniform() - 1.0;
  return t;
}

TEST(BuildAdjacency, SymmetrizesSingleEdge) {
  const std::vector<Edge> e{{0, 1}};
  const SparseMatrix a = build_adjacency(e, 2, true);
  EXPECT_EQ(a.nnz(), 2u);
  EXPECT_EQ(a.to_dense(), Tensor(2, 2, std::vector<double>{0, 1, 1, 0}));
}

TEST(BuildAdjacency, EmptyGraph) {
  const SparseMatrix a = build_adjacency({}, 3, true);
  EXPECT_EQ(a.nnz(), 0u);
  EXPECT_EQ(a.n_rows, 3u);
  a.validate();
}

TEST(BuildAdjacency, DuplicatesCollapse) {
  const std::vector<Edge> once{{0, 1}};
  const std::vector<Edge> many{{0, 1}, {1, 0}, {0, 1}};
  const SparseMatrix a = build_adjacency(once, 2, true);
  const SparseMatrix b = build_adjacency(many, 2, true);
  EXPECT_EQ(a.col_idx, b.col_idx);
  EXPECT_EQ(a.values, b.values);
}

TEST(BuildAdjacency, RejectsOutOfRange) {
  const std::vector<Edge> e{{0, 3}};
  EXPECT_THROW(build_adjacency(e, 3, true), MalformedInput);
}

TEST(BuildAdjacency, DropsSelfLoops) {
  const std::vector<Edge> e{{1, 1}, {0, 1}};
  EXPECT_EQ(build_adjacency(e, 2, true).nnz(), 2u);
}

TEST(Normalize, TwoNodePathIsAllOnes) {
  const std::vector<Edge> e{{0, 1}};
  const Tensor n = normalize(build_adjacency(e, 2, true)).to_dense();
  EXPECT_EQ(n, Tensor(2, 2, 1.0));
}

TEST(Normalize, IsolatedNodesGiveIdentity) {
  EXPECT_EQ(normalize(build_adjacency({}, 3, true)).to_dense(), Tensor::identity(3));
}

TEST(Normalize, StarCenterEntry) {
  const std::vector<Edge> e{{0, 1}, {0, 2}};
  const Tensor n = normalize(build_adjacency(e, 3, true)).to_dense();
  EXPECT_NEAR(n(0, 1), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(n(0, 1), 0.7071, 1e-4);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(n(i, i), 1.0);
}

TEST(Normalize, MatchesDenseOracleBothModes) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto edges = random_edges(5, 0.4, rng);
    const SparseMatrix a = build_adjacency(edges, 5, true);
    const auto dense = oracle::adjacency(5, edges);
    EXPECT_LT(oracle::max_abs_diff(oracle::normalize(dense), normalize(a).to_dense()), 1e-15);
    EXPECT_LT(oracle::max_abs_diff(oracle::normalize(dense, true),
                                   normalize(a, Normalization::kRenormTrick).to_dense()),
              1e-15);
  }
}

TEST(Normalize, PatternIsAPlusDiagonalWithValuesInUnitInterval) {
  Rng rng(3);
  const auto edges = random_edges(30, 0.2, rng);
  const SparseMatrix a = build_adjacency(edges, 30, true);
  const SparseMatrix n = normalize(a);
  n.validate();
  EXPECT_EQ(n.nnz(), a.nnz() + 30);
  for (std::size_t r = 0; r < 30; ++r) {
    EXPECT_LT(n.find(r, r), n.nnz());
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      EXPECT_LT(n.find(r, a.col_idx[k]), n.nnz());
    }
  }
  for (double v : n.values) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Normalize, RejectsAsymmetric) {
  const std::vector<Edge> e{{0, 1}};
  EXPECT_THROW(normalize(build_adjacency(e, 2, false)), ContractViolation);
}

TEST(EdgeSetTest, MirrorAndDiagonal) {
  const std::vector<Edge> e{{0, 1}, {1, 2}};
  const EdgeSet es(normalize(build_adjacency(e, 3, true)));
  EXPECT_EQ(es.size(), 7u);
  for (std::size_t k = 0; k < es.size(); ++k) {
    const std::size_t m = es.mirror(k);
    EXPECT_EQ(es.row(m), es.col(k));
    EXPECT_EQ(es.col(m), es.row(k));
    EXPECT_EQ(es.is_diagonal(k), m == k);
  }
}

TEST(EdgeSetTest, RequiresDiagonal) {
  const std::vector<Edge> e{{0, 1}};
  EXPECT_THROW(EdgeSet(build_adjacency(e, 2, true)), ContractViolation);
}

TEST(Spmm, IdentityAndZero) {
  Rng rng(1);
  const Tensor h = random_tensor(4, 3, rng);
  const SparseMatrix id = normalize(build_adjacency({}, 4, true));
  EXPECT_EQ(spmm(id, h), h);
  const SparseMatrix zero = build_adjacency({}, 4, true);
  EXPECT_EQ(spmm(zero, h), Tensor(4, 3));
}

TEST(Spmm, TwoNodePath) {
  const std::vector<Edge> e{{0, 1}};
  const Tensor out = spmm(normalize(build_adjacency(e, 2, true)), Tensor::identity(2));
  EXPECT_EQ(out, Tensor(2, 2, 1.0));
}

TEST(MaskedSpmm, AllOnesIsBitwiseSpmmAndZerosGiveZero) {
  Rng rng(11);
  const auto edges = random_edges(12, 0.3, rng);
  const SparseMatrix n = normalize(build_adjacency(edges, 12, true));
  const Tensor h = random_tensor(12, 5, rng);
  const std::vector<double> ones(n.nnz(), 1.0), zeros(n.nnz(), 0.0);
  EXPECT_EQ(masked_spmm(n, ones, h), spmm(n, h));
  EXPECT_EQ(masked_spmm(n, zeros, h), Tensor(12, 5));
}

TEST(MaskedSpmm, RandomMasksMatchDenseOracle) {
  Rng rng(5);
  for (std::size_t nodes : {4u, 5u}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto edges = random_edges(nodes, 0.5, rng);
      const SparseMatrix n = normalize(build_adjacency(edges, nodes, true));
      std::vector<double> mask(n.nnz());
      auto z = oracle::zeros(nodes, nodes);
      for (std::size_t r = 0; r < nodes; ++r) {
        for (std::size_t k = n.row_ptr[r]; k < n.row_ptr[r + 1]; ++k) {
          mask[k] = rng.bernoulli(0.5) ? 1.0 : 0.0;
          z[r][n.col_idx[k]] = mask[k];
        }
      }
      const Tensor h = random_tensor(nodes, 3, rng);
      const auto dense_n = oracle::normalize(oracle::adjacency(nodes, edges));
      const auto expect = oracle::matmul(oracle::hadamard(dense_n, z), oracle::from_tensor(h));
      EXPECT_LT(oracle::max_abs_diff(expect, masked_spmm(n, mask, h)), 1e-12);
      EXPECT_LT(oracle::max_abs_diff(oracle::matmul(dense_n, oracle::from_tensor(h)), spmm(n, h)),
                1e-12);
      // Transposed product against the dense transpose.
      auto zt = oracle::hadamard(dense_n, z);
      oracle::Dense t = oracle::zeros(nodes, nodes);
      for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t j = 0; j < nodes; ++j) t[i][j] = zt[j][i];
      }
      EXPECT_LT(oracle::max_abs_diff(oracle::matmul(t, oracle::from_tensor(h)),
                                     masked_spmm_transposed(n, mask, h)),
                1e-12);
    }
  }
}

TEST(MaskedSpmm, ColumnSliceAccumulatesOnlyItsColumns) {
  Rng rng(2);
  const auto edges = random_edges(6, 0.5, rng);
  const SparseMatrix n = normalize(build_adjacency(edges, 6, true));
  const Tensor h = random_tensor(6, 4, rng);
  const std::vector<double> mask(n.nnz(), 1.0);
  Tensor out(6, 4, -7.0);
  masked_spmm_cols(n, mask, h, 1, 2, out, 1);
  const Tensor full = spmm(n, h);
  for (std::size_t r = 0; r < 6; ++r) {
    EXPECT_EQ(out(r, 0), -7.0);
    EXPECT_EQ(out(r, 3), -7.0);
    EXPECT_NEAR(out(r, 1), full(r, 1) - 7.0, 1e-14);
    EXPECT_NEAR(out(r, 2), full(r, 2) - 7.0, 1e-14);
  }
}

TEST(NormalizeMasked, AllOnesEqualsNormalizeAndDropMatchesOracle) {
  const std::vector<Edge> e{{0, 1}, {1, 2}, {2, 3}, {0, 3}, {1, 3}};
  const SparseMatrix a = build_adjacency(e, 4, true);
  const SparseMatrix n = normalize(a);
  const EdgeSet es(n);
  const std::vector<double> ones(es.size(), 1.0);
  const auto v = normalize_masked(es, ones);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(v[k], n.values[k], 1e-15);

  // Drop edge (1,3) in both directions.
  std::vector<double> z(es.size(), 1.0);
  z[n.find(1, 3)] = 0.0;
  z[n.find(3, 1)] = 0.0;
  const auto masked = normalize_masked(es, z);
  const std::vector<Edge> e2{{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  const auto expect = oracle::normalize(oracle::adjacency(4, e2));
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t k = n.row_ptr[r]; k < n.row_ptr[r + 1]; ++k) {
      EXPECT_NEAR(masked[k], expect[r][n.col_idx[k]], 1e-15);
    }
  }
}

TEST(LambdaMax, KnownSpectra) {
  EXPECT_NEAR(lambda_max(normalize(build_adjacency({}, 4, true))).value, 1.0, 1e-8);
  const std::vector<Edge> path{{0, 1}};
  // The all-ones start is an eigenvector of the 2-node path.
  EXPECT_NEAR(lambda_max(build_adjacency(path, 2, true)).value, 1.0, 1e-8);
  std::vector<Edge> k4;
  for (NodeId u = 0; u < 4; ++u) {
    for (NodeId v = u + 1; v < 4; ++v) k4.emplace_back(u, v);
  }
  const SpectralEstimate s = lambda_max(build_adjacency(k4, 4, true));
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.value, 3.0, 1e-8);
  EXPECT_EQ(lambda_max(build_adjacency({}, 3, true)).value, 0.0);
}

TEST(LambdaMax, RegularCycleAndIrregularGraph) {
  std::vector<Edge> cycle;
  for (NodeId v = 0; v < 10; ++v) cycle.emplace_back(v, (v + 1) % 10);
  EXPECT_NEAR(lambda_max(build_adjacency(cycle, 10, true)).value, 2.0, 1e-8);
  // Star K_{1,4}: largest eigenvalue sqrt(4) = 2.
  const std::vector<Edge> star{{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  EXPECT_NEAR(lambda_max(build_adjacency(star, 5, true), 1e-12).value, 2.0, 1e-6);
}

TEST(Blocks, CoverFeaturesExactlyOnce) {
  for (std::size_t width = 1; width <= 17; ++width) {
    for (std::size_t nb = 1; nb <= width; ++nb) {
      const auto r = block_ranges(width, nb);
      ASSERT_EQ(r.size(), nb);
      EXPECT_EQ(r.front().begin, 0u);
      EXPECT_EQ(r.back().end, width);
      for (std::size_t b = 0; b < nb; ++b) {
        EXPECT_GE(r[b].width(), width / nb);
        EXPECT_LE(r[b].width(), width / nb + 1);
        if (b > 0) EXPECT_EQ(r[b].begin, r[b - 1].end);
      }
    }
  }
  const auto r = block_ranges(10, 4);
  EXPECT_EQ(r[0].width(), 3u);
  EXPECT_EQ(r[1].width(), 3u);
  EXPECT_EQ(r[2].width(), 2u);
  EXPECT_THROW(block_ranges(3, 0), ContractViolation);
  EXPECT_THROW(block_ranges(3, 4), ContractViolation);
}

}  // namespace
}  // namespace gdc
