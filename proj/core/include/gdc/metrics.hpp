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
#include <vector>

#include "gdc/sparse.hpp"
#include "gdc/tensor.hpp"

namespace gdc {

/// Row-wise argmax; ties go to the lowest class index.
std::vector<std::int32_t> argmax_rows(const Tensor& probs);

/// Fraction of idx whose prediction equals the label. Throws
/// ContractViolation on an empty index set.
double accuracy(std::span<const std::int32_t> predictions, std::span<const std::int32_t> labels,
                std::span<const std::size_t> idx);

/// -sum_c p log p per row, with 0 log 0 = 0. Throws ContractViolation if a row
/// is off the simplex by more than 1e-9.
std::vector<double> predictive_entropy(const Tensor& probs);

struct PavpuRow {
  double frac = 0.0;
  double pavpu = 0.0;
  double p_acc_given_cert = 0.0;    // 0 when no node is certain
  double p_cert_given_inacc = 0.0;  // 0 when every node is accurate
};

/// For each frac, a node is certain iff entropy <= frac * max_entropy, where
/// max_entropy is the largest observed entropy, or max_entropy_override when
/// it is positive (ln C for the class-count convention).
std::vector<PavpuRow> pavpu(const std::vector<bool>& correct, std::span<const double> entropy,
                            std::span<const double> fracs, double max_entropy_override = 0.0);

/// ||H - A H / lam||_F^2 using the raw adjacency; divided by ||H||_F^2 when
/// normalized (0 for H = 0). Throws ContractViolation for lam <= 0.
double total_variation(const Tensor& h, const SparseMatrix& a, double lam, bool normalized);

}  // namespace gdc
