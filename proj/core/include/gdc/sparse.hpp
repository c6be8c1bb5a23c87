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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gdc/tensor.hpp"

namespace gdc {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Compressed sparse row matrix with strictly increasing columns per row.
struct SparseMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<NodeId> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return col_idx.size(); }

  /// Throws ContractViolation if any CSR invariant does not hold.
  void validate() const;

  /// Position of (r, c) in the nonzero arrays, or nnz() if absent.
  std::size_t find(std::size_t r, std::size_t c) const;

  bool is_symmetric() const;
  Tensor to_dense() const;
};

/// Binary adjacency with duplicates collapsed and the diagonal dropped.
/// Throws MalformedInput for node indices outside [0, n).
SparseMatrix build_adjacency(std::span<const Edge> edges, std::size_t n, bool symmetrize);

/// Degree of every node in a binary adjacency (count of stored nonzeros per row).
std::vector<std::size_t> degrees(const SparseMatrix& a);

enum class Normalization {
  kIdentityPlusSym,  // I + D^{-1/2} A D^{-1/2}
  kRenormTrick,      // (D+I)^{-1/2} (A+I) (D+I)^{-1/2}
};

/// Normalized adjacency over the pattern of A plus the full diagonal.
/// Isolated nodes keep a diagonal entry and no neighbours (0/0 := 0).
/// Throws ContractViolation when A is not symmetric.
SparseMatrix normalize(const SparseMatrix& a,
                       Normalization mode = Normalization::kIdentityPlusSym);

/// The nonzero pattern of a normalized adjacency, with the bookkeeping the
/// mask samplers need: entry coordinates, the transpose position of every
/// entry, and which entries are self-loops.
class EdgeSet {
 public:
  EdgeSet() = default;
  explicit EdgeSet(const SparseMatrix& pattern);

  std::size_t size() const noexcept { return rows_.size(); }
  std::size_t n_nodes() const noexcept { return n_nodes_; }
  NodeId row(std::size_t e) const { return rows_[e]; }
  NodeId col(std::size_t e) const { return cols_[e]; }
  // Position of (col, row); equals e for diagonal entries.
  std::size_t mirror(std::size_t e) const { return mirror_[e]; }
  bool is_diagonal(std::size_t e) const { return rows_[e] == cols_[e]; }
  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }

 private:
  std::size_t n_nodes_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<NodeId> rows_;
  std::vector<NodeId> cols_;
  std::vector<std::size_t> mirror_;
};

/// Values of N(A ⊙ Z) on the normalized pattern, where Z is a symmetric
/// keep mask over the off-diagonal entries. The identity part is not masked.
std::vector<double> normalize_masked(const EdgeSet& edges, std::span<const double> mask,
                                     Normalization mode = Normalization::kIdentityPlusSym);

Tensor spmm(const SparseMatrix& a, const Tensor& h);

/// (A ⊙ mask) * H, where mask is aligned to A's nonzeros.
Tensor masked_spmm(const SparseMatrix& a, std::span<const double> mask, const Tensor& h);

/// (A ⊙ mask)^T * G.
Tensor masked_spmm_transposed(const SparseMatrix& a, std::span<const double> mask,
                              const Tensor& g);

/// Column slices: out[:, out_col0 + j] += (A ⊙ mask) * H[:, in_col0 + j] for j < width.
void masked_spmm_cols(const SparseMatrix& a, std::span<const double> mask, const Tensor& h,
                      std::size_t in_col0, std::size_t width, Tensor& out,
                      std::size_t out_col0);

struct SpectralEstimate {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Power iteration for the largest eigenvalue magnitude of a symmetric matrix,
/// starting from the all-ones vector.
SpectralEstimate lambda_max(const SparseMatrix& a, double tol = 1e-8, std::size_t max_iter = 1000);

}  // namespace gdc
