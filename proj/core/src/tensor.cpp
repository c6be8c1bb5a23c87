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

#include "gdc/tensor.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "gdc/error.hpp"

namespace gdc {

namespace {

std::string shape_str(const Tensor& t) {
  return "(" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ")";
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ContractViolation("Tensor: data length " + std::to_string(data_.size()) +
                            " does not match shape " + std::to_string(rows) + "x" +
                            std::to_string(cols));
  }
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw ContractViolation("Tensor::item on non-scalar " + shape_str(*this));
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::transpose() const {
  Tensor t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) {
    throw ContractViolation("Tensor +=: shape " + shape_str(*this) + " vs " + shape_str(other));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor matmul(const Tensor& x, const Tensor& w) {
  if (x.cols() != w.rows()) {
    throw ContractViolation("matmul: inner dimensions " + shape_str(x) + " * " + shape_str(w));
  }
  const std::size_t n = x.rows(), k = x.cols(), m = w.cols();
  Tensor out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.row(i).data();
    const double* xi = x.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double a = xi[p];
      if (a == 0.0) continue;
      const double* wp = w.row(p).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += a * wp[j];
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& x, const Tensor& g) {
  if (x.rows() != g.rows()) {
    throw ContractViolation("matmul_tn: row mismatch " + shape_str(x) + " vs " + shape_str(g));
  }
  const std::size_t n = x.rows(), k = x.cols(), m = g.cols();
  Tensor out(k, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i).data();
    const double* gi = g.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double a = xi[p];
      if (a == 0.0) continue;
      double* o = out.row(p).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += a * gi[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& g, const Tensor& w) {
  if (g.cols() != w.cols()) {
    throw ContractViolation("matmul_nt: column mismatch " + shape_str(g) + " vs " + shape_str(w));
  }
  // g * w^T through a transposed copy so the inner loop is a contiguous axpy.
  const std::size_t k = w.rows(), m = w.cols();
  Tensor wt(m, k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < m; ++j) wt(j, p) = w(p, j);
  }
  return matmul(g, wt);
}

double frobenius_sq(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v * v;
  return acc;
}

}  // namespace gdc
