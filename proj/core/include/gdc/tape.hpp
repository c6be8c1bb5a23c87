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
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "gdc/blocks.hpp"
#include "gdc/error.hpp"
#include "gdc/sparse.hpp"
#include "gdc/tensor.hpp"

namespace gdc {

// Raised when a recorded operation produces NaN or infinity.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
  bool valid() const noexcept { return id != kNone; }
  friend bool operator==(Var, Var) = default;
};

class Tape;

/// Gradients produced by Tape::backward. Values that received no gradient
/// (unused parameters, constants) read back as zeros of the right shape.
class Gradients {
 public:
  const Tensor& operator[](Var v) const;

 private:
  friend class Tape;
  std::vector<Tensor> grads_;
  std::vector<Tensor> zeros_;
};

/// Reverse-mode record of one forward computation. A tape is built fresh for
/// every training step and is not thread-safe; separate tapes may be used on
/// separate threads. Sparse matrices referenced by recorded ops must outlive
/// the tape.
class Tape {
 public:
  // Adjoint rule: receives dL/d(output) and accumulates into the inputs.
  using Adjoint = std::function<void(const Tensor& grad_out, Tape& tape)>;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Appends an operation node. The adjoint runs only if some input requires
  /// a gradient. Throws NonFiniteError if value has non-finite entries.
  Var record(Tensor value, std::vector<Var> inputs, Adjoint adjoint, const char* op_name);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Adds g into the gradient of v (no-op if v does not require a gradient).
  void accumulate(Var v, const Tensor& g);

  /// Reverse accumulation from a 1x1 terminal. Throws ContractViolation for a
  /// non-scalar terminal.
  Gradients backward(Var loss);

 private:
  struct Node {
    Tensor value;
    std::vector<Var> inputs;
    Adjoint adjoint;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::vector<Tensor>* grads_ = nullptr;
};

Var record_matmul(Tape& tape, Var x, Var w);

/// (A ⊙ mask) * H with mask a 1 x nnz(A) row. When differentiate_mask is
/// false no gradient is sent to the mask.
Var record_masked_spmm(Tape& tape, const SparseMatrix& a, Var mask, Var h,
                       bool differentiate_mask);

/// Per-block aggregation: block b of H's columns (see block_ranges) is
/// multiplied by (A ⊙ masks[b]). With one block this is record_masked_spmm.
Var record_block_masked_spmm(Tape& tape, const SparseMatrix& a, std::span<const Var> masks,
                             Var h, bool differentiate_mask);

/// Columns [r.begin, r.end) of x.
Var record_cols(Tape& tape, Var x, BlockRange r);

/// Rows [r.begin, r.end) of x.
Var record_rows(Tape& tape, Var x, BlockRange r);

Var record_relu(Tape& tape, Var x);
Var record_sigmoid(Tape& tape, Var x);
Var record_add(Tape& tape, Var x, Var y);
Var record_scale(Tape& tape, Var x, double s);
Var record_frobenius_sq(Tape& tape, Var x);

/// Elementwise product with a constant tensor of the same shape.
Var record_mul_const(Tape& tape, Var x, const Tensor& c);

/// x + b where b is a 1 x cols row broadcast over rows.
Var record_add_row(Tape& tape, Var x, Var b);

/// Copy of x with the listed flat positions overwritten by value; those
/// positions pass no gradient.
Var record_set_entries(Tape& tape, Var x, std::span<const std::size_t> positions, double value);

Var record_log_softmax_rows(Tape& tape, Var x);

/// Mean over observed rows of -logprobs[v, labels[v]]. Throws
/// ContractViolation for an empty observed set or an invalid label.
Var record_masked_nll(Tape& tape, Var logprobs, std::span<const std::int32_t> labels,
                      std::span<const std::size_t> observed);

}  // namespace gdc
