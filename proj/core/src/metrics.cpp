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

#include "gdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gdc/error.hpp"

namespace gdc {

std::vector<std::int32_t> argmax_rows(const Tensor& probs) {
  std::vector<std::int32_t> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row(r);
    out[r] = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(std::span<const std::int32_t> predictions, std::span<const std::int32_t> labels,
                std::span<const std::size_t> idx) {
  if (idx.empty()) throw ContractViolation("accuracy: empty index set");
  std::size_t hit = 0;
  for (std::size_t i : idx) {
    if (i >= predictions.size() || i >= labels.size()) {
      throw ContractViolation("accuracy: index " + std::to_string(i) + " out of range");
    }
    if (predictions[i] == labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(idx.size());
}

std::vector<double> predictive_entropy(const Tensor& probs) {
  std::vector<double> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double sum = 0.0, h = 0.0;
    for (double p : probs.row(r)) {
      if (p < -1e-9) throw ContractViolation("predictive_entropy: negative probability");
      sum += p;
      if (p > 0.0) h -= p * std::log(p);
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ContractViolation("predictive_entropy: row " + std::to_string(r) + " sums to " +
                              std::to_string(sum));
    }
    out[r] = std::max(h, 0.0);
  }
  return out;
}

std::vector<PavpuRow> pavpu(const std::vector<bool>& correct, std::span<const double> entropy,
                            std::span<const double> fracs, double max_entropy_override) {
  if (correct.empty()) throw ContractViolation("pavpu: empty input");
  if (correct.size() != entropy.size()) throw ContractViolation("pavpu: length mismatch");
  const double max_h = max_entropy_override > 0.0
                           ? max_entropy_override
                           : *std::max_element(entropy.begin(), entropy.end());
  std::vector<PavpuRow> rows;
  for (double f : fracs) {
    if (f < 0.0 || f > 1.0) throw ContractViolation("pavpu: fraction outside [0,1]");
    const double tau = f * max_h;
    std::size_t ac = 0, au = 0, ic = 0, iu = 0;
    for (std::size_t i = 0; i < correct.size(); ++i) {
      const bool certain = entropy[i] <= tau;
      if (correct[i]) {
        certain ? ++ac : ++au;
      } else {
        certain ? ++ic : ++iu;
      }
    }
    PavpuRow row;
    row.frac = f;
    row.pavpu = static_cast<double>(ac + iu) / static_cast<double>(correct.size());
    if (ac + ic > 0) row.p_acc_given_cert = static_cast<double>(ac) / static_cast<double>(ac + ic);
    if (ic + iu > 0) {
      row.p_cert_given_inacc = static_cast<double>(ic) / static_cast<double>(ic + iu);
    }
    rows.push_back(row);
  }
  return rows;
}

double total_variation(const Tensor& h, const SparseMatrix& a, double lam, bool normalized) {
  if (!(lam > 0.0)) throw ContractViolation("total_variation: lambda must be positive");
  if (a.n_rows != h.rows() || a.n_cols != h.rows()) {
    throw ContractViolation("total_variation: adjacency does not match signal rows");
  }
  const Tensor ah = spmm(a, h);
  double tv = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = h[i] - ah[i] / lam;
    tv += d * d;
  }
  if (!normalized) return tv;
  const double norm = frobenius_sq(h);
  return norm > 0.0 ? tv / norm : 0.0;
}

}  // namespace gdc
