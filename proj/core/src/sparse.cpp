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

#include "gdc/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gdc/error.hpp"

namespace gdc {

void SparseMatrix::validate() const {
  if (row_ptr.size() != n_rows + 1 || row_ptr.front() != 0 || row_ptr.back() != nnz()) {
    throw ContractViolation("SparseMatrix: row_ptr inconsistent with shape or nnz");
  }
  if (values.size() != nnz()) throw ContractViolation("SparseMatrix: values length != nnz");
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1]) throw ContractViolation("SparseMatrix: row_ptr decreasing");
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) {
      if (col_idx[e] >= n_cols) throw ContractViolation("SparseMatrix: column out of range");
      if (e > row_ptr[r] && col_idx[e] <= col_idx[e - 1]) {
        throw ContractViolation("SparseMatrix: columns not strictly increasing in row " +
                                std::to_string(r));
      }
      if (!std::isfinite(values[e])) throw ContractViolation("SparseMatrix: non-finite value");
    }
  }
}

std::size_t SparseMatrix::find(std::size_t r, std::size_t c) const {
  const auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
  const auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
  const auto it = std::lower_bound(first, last, static_cast<NodeId>(c));
  if (it == last || *it != c) return nnz();
  return static_cast<std::size_t>(it - col_idx.begin());
}

bool SparseMatrix::is_symmetric() const {
  if (n_rows != n_cols) return false;
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) {
      const std::size_t m = find(col_idx[e], r);
      if (m == nnz() || values[m] != values[e]) return false;
    }
  }
  return true;
}

Tensor SparseMatrix::to_dense() const {
  Tensor d(n_rows, n_cols);
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) d(r, col_idx[e]) = values[e];
  }
  return d;
}

SparseMatrix build_adjacency(std::span<const Edge> edges, std::size_t n, bool symmetrize) {
  std::vector<Edge> coo;
  coo.reserve(edges.size() * (symmetrize ? 2 : 1));
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw MalformedInput("build_adjacency: edge (" + std::to_string(u) + ", " +
                           std::to_string(v) + ") out of range for n=" + std::to_string(n));
    }
    if (u == v) continue;
    coo.emplace_back(u, v);
    if (symmetrize) coo.emplace_back(v, u);
  }
  std::sort(coo.begin(), coo.end());
  coo.erase(std::unique(coo.begin(), coo.end()), coo.end());

  SparseMatrix a;
  a.n_rows = a.n_cols = n;
  a.row_ptr.assign(n + 1, 0);
  a.col_idx.reserve(coo.size());
  for (const auto& [u, v] : coo) {
    ++a.row_ptr[u + 1];
    a.col_idx.push_back(v);
  }
  for (std::size_t r = 0; r < n; ++r) a.row_ptr[r + 1] += a.row_ptr[r];
  a.values.assign(coo.size(), 1.0);
  return a;
}

std::vector<std::size_t> degrees(const SparseMatrix& a) {
  std::vector<std::size_t> d(a.n_rows);
  for (std::size_t r = 0; r < a.n_rows; ++r) d[r] = a.row_ptr[r + 1] - a.row_ptr[r];
  return d;
}

SparseMatrix normalize(const SparseMatrix& a, Normalization mode) {
  if (!a.is_symmetric()) throw ContractViolation("normalize: adjacency is not symmetric");
  const std::size_t n = a.n_rows;
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double d = 0.0;
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) {
      if (a.col_idx[e] != r) d += a.values[e];
    }
    if (mode == Normalization::kRenormTrick) d += 1.0;
    inv_sqrt[r] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }

  SparseMatrix out;
  out.n_rows = out.n_cols = n;
  out.row_ptr.assign(n + 1, 0);
  out.col_idx.reserve(a.nnz() + n);
  out.values.reserve(a.nnz() + n);
  for (std::size_t r = 0; r < n; ++r) {
    bool diag_done = false;
    auto emit_diag = [&] {
      const double self = mode == Normalization::kRenormTrick ? inv_sqrt[r] * inv_sqrt[r] : 1.0;
      out.col_idx.push_back(static_cast<NodeId>(r));
      out.values.push_back(self);
      diag_done = true;
    };
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) {
      const NodeId c = a.col_idx[e];
      if (c == r) continue;
      if (!diag_done && c > r) emit_diag();
      out.col_idx.push_back(c);
      out.values.push_back(a.values[e] * inv_sqrt[r] * inv_sqrt[c]);
    }
    if (!diag_done) emit_diag();
    out.row_ptr[r + 1] = out.col_idx.size();
  }
  return out;
}

EdgeSet::EdgeSet(const SparseMatrix& pattern)
    : n_nodes_(pattern.n_rows), row_ptr_(pattern.row_ptr), cols_(pattern.col_idx) {
  if (pattern.n_rows != pattern.n_cols) throw ContractViolation("EdgeSet: matrix not square");
  rows_.resize(pattern.nnz());
  mirror_.resize(pattern.nnz());
  for (std::size_t r = 0; r < pattern.n_rows; ++r) {
    if (pattern.find(r, r) == pattern.nnz()) {
      throw ContractViolation("EdgeSet: missing diagonal entry for node " + std::to_string(r));
    }
    for (std::size_t e = pattern.row_ptr[r]; e < pattern.row_ptr[r + 1]; ++e) {
      rows_[e] = static_cast<NodeId>(r);
      const std::size_t m = pattern.find(pattern.col_idx[e], r);
      if (m == pattern.nnz()) throw ContractViolation("EdgeSet: pattern is not symmetric");
      mirror_[e] = m;
    }
  }
}

std::vector<double> normalize_masked(const EdgeSet& edges, std::span<const double> mask,
                                     Normalization mode) {
  if (mask.size() != edges.size()) {
    throw ContractViolation("normalize_masked: mask length " + std::to_string(mask.size()) +
                            " != edge count " + std::to_string(edges.size()));
  }
  const std::size_t n = edges.n_nodes();
  const auto& rp = edges.row_ptr();
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double d = mode == Normalization::kRenormTrick ? 1.0 : 0.0;
    for (std::size_t e = rp[r]; e < rp[r + 1]; ++e) {
      if (!edges.is_diagonal(e)) d += mask[e];
    }
    inv_sqrt[r] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  std::vector<double> values(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const NodeId r = edges.row(e), c = edges.col(e);
    if (edges.is_diagonal(e)) {
      values[e] = mode == Normalization::kRenormTrick ? inv_sqrt[r] * inv_sqrt[r] : 1.0;
    } else {
      values[e] = mask[e] * inv_sqrt[r] * inv_sqrt[c];
    }
  }
  return values;
}

namespace {

void check_rows(const SparseMatrix& a, const Tensor& h, const char* who) {
  if (a.n_cols != h.rows()) {
    throw ContractViolation(std::string(who) + ": A has " + std::to_string(a.n_cols) +
                            " columns but H has " + std::to_string(h.rows()) + " rows");
  }
}

void check_mask(const SparseMatrix& a, std::span<const double> mask, const char* who) {
  if (mask.size() != a.nnz()) {
    throw ContractViolation(std::string(who) + ": mask length " + std::to_string(mask.size()) +
                            " != nnz " + std::to_string(a.nnz()));
  }
}

}  // namespace

Tensor spmm(const SparseMatrix& a, const Tensor& h) {
  check_rows(a, h, "spmm");
  const std::size_t f = h.cols();
  Tensor out(a.n_rows, f);
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    double* o = out.row(r).data();
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) {
      const double w = a.values[e];
      const double* hc = h.row(a.col_idx[e]).data();
      for (std::size_t j = 0; j < f; ++j) o[j] += w * hc[j];
    }
  }
  return out;
}

Tensor masked_spmm(const SparseMatrix& a, std::span<const double> mask, const Tensor& h) {
  check_rows(a, h, "masked_spmm");
  check_mask(a, mask, "masked_spmm");
  Tensor out(a.n_rows, h.cols());
  masked_spmm_cols(a, mask, h, 0, h.cols(), out, 0);
  return out;
}

void masked_spmm_cols(const SparseMatrix& a, std::span<const double> mask, const Tensor& h,
                      std::size_t in_col0, std::size_t width, Tensor& out,
                      std::size_t out_col0) {
  check_rows(a, h, "masked_spmm_cols");
  check_mask(a, mask, "masked_spmm_cols");
  if (in_col0 + width > h.cols() || out_col0 + width > out.cols() || out.rows() != a.n_rows) {
    throw ContractViolation("masked_spmm_cols: column range out of bounds");
  }
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    double* o = out.row(r).data() + out_col0;
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) {
      const double w = a.values[e] * mask[e];
      if (w == 0.0) continue;
      const double* hc = h.row(a.col_idx[e]).data() + in_col0;
      for (std::size_t j = 0; j < width; ++j) o[j] += w * hc[j];
    }
  }
}

Tensor masked_spmm_transposed(const SparseMatrix& a, std::span<const double> mask,
                              const Tensor& g) {
  check_mask(a, mask, "masked_spmm_transposed");
  if (a.n_rows != g.rows()) throw ContractViolation("masked_spmm_transposed: row mismatch");
  const std::size_t f = g.cols();
  Tensor out(a.n_cols, f);
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    const double* gr = g.row(r).data();
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) {
      const double w = a.values[e] * mask[e];
      if (w == 0.0) continue;
      double* o = out.row(a.col_idx[e]).data();
      for (std::size_t j = 0; j < f; ++j) o[j] += w * gr[j];
    }
  }
  return out;
}

SpectralEstimate lambda_max(const SparseMatrix& a, double tol, std::size_t max_iter) {
  if (tol <= 0.0) throw ContractViolation("lambda_max: tol must be positive");
  if (a.n_rows != a.n_cols) throw ContractViolation("lambda_max: matrix not square");
  const std::size_t n = a.n_rows;
  SpectralEstimate est;
  if (n == 0) {
    est.converged = true;
    return est;
  }
  Tensor x(n, 1, 1.0 / std::sqrt(static_cast<double>(n)));
  double prev = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    Tensor y = spmm(a, x);
    const double norm = std::sqrt(frobenius_sq(y));
    est.iterations = it;
    if (norm == 0.0) {
      est.value = 0.0;
      est.converged = true;
      return est;
    }
    est.value = norm;
    if (it > 1 && std::abs(norm - prev) <= tol * norm) {
      est.converged = true;
      return est;
    }
    prev = norm;
    y *= 1.0 / norm;
    x = std::move(y);
  }
  return est;
}

}  // namespace gdc
