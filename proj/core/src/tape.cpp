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

#include "gdc/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "gdc/blocks.hpp"

namespace gdc {

const Tensor& Gradients::operator[](Var v) const {
  const Tensor& g = grads_.at(v.id);
  return g.empty() ? zeros_.at(v.id) : g;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, requires_grad});
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> inputs, Adjoint adjoint, const char* op_name) {
  if (!value.all_finite()) {
    throw NonFiniteError(std::string("non-finite output from ") + op_name);
  }
  bool rg = false;
  for (Var in : inputs) rg = rg || nodes_.at(in.id).requires_grad;
  nodes_.push_back(Node{std::move(value), std::move(inputs), rg ? std::move(adjoint) : nullptr, rg});
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Tensor& g) {
  if (!nodes_.at(v.id).requires_grad) return;
  Tensor& slot = (*grads_)[v.id];
  if (slot.empty()) {
    slot = g;
  } else {
    slot += g;
  }
}

Gradients Tape::backward(Var loss) {
  if (nodes_.at(loss.id).value.size() != 1) {
    throw ContractViolation("backward: terminal is not a scalar");
  }
  Gradients out;
  out.grads_.resize(nodes_.size());
  out.zeros_.reserve(nodes_.size());
  for (const Node& n : nodes_) out.zeros_.emplace_back(n.value.rows(), n.value.cols());
  grads_ = &out.grads_;
  if (nodes_[loss.id].requires_grad) {
    out.grads_[loss.id] = Tensor::scalar(1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.adjoint || out.grads_[i].empty()) continue;
      // Adjoints only write to inputs, which precede node i.
      n.adjoint(out.grads_[i], *this);
    }
  }
  grads_ = nullptr;
  return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) {
    throw ContractViolation(std::string(who) + ": shape mismatch (" + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                            "x" + std::to_string(b.cols()) + ")");
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var record_matmul(Tape& tape, Var x, Var w) {
  Tensor out = matmul(tape.value(x), tape.value(w));
  return tape.record(
      std::move(out), {x, w},
      [x, w](const Tensor& g, Tape& t) {
        if (t.requires_grad(x)) t.accumulate(x, matmul_nt(g, t.value(w)));
        if (t.requires_grad(w)) t.accumulate(w, matmul_tn(t.value(x), g));
      },
      "matmul");
}

Var record_masked_spmm(Tape& tape, const SparseMatrix& a, Var mask, Var h,
                       bool differentiate_mask) {
  const Var masks[1] = {mask};
  return record_block_masked_spmm(tape, a, masks, h, differentiate_mask);
}

Var record_block_masked_spmm(Tape& tape, const SparseMatrix& a, std::span<const Var> masks,
                             Var h, bool differentiate_mask) {
  const Tensor& hv = tape.value(h);
  if (a.n_cols != hv.rows()) {
    throw ContractViolation("record_block_masked_spmm: A columns " + std::to_string(a.n_cols) +
                            " != H rows " + std::to_string(hv.rows()));
  }
  const auto blocks = block_ranges(hv.cols(), masks.size());
  for (Var m : masks) {
    if (tape.value(m).size() != a.nnz()) {
      throw ContractViolation("record_block_masked_spmm: mask length " +
                              std::to_string(tape.value(m).size()) + " != nnz " +
                              std::to_string(a.nnz()));
    }
  }
  Tensor out(a.n_rows, hv.cols());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    masked_spmm_cols(a, tape.value(masks[b]).data(), hv, blocks[b].begin, blocks[b].width(), out,
                     blocks[b].begin);
  }

  std::vector<Var> inputs(masks.begin(), masks.end());
  inputs.push_back(h);
  std::vector<Var> mask_vars(masks.begin(), masks.end());
  const SparseMatrix* ap = &a;
  return tape.record(
      std::move(out), std::move(inputs),
      [ap, mask_vars, h, blocks, differentiate_mask](const Tensor& g, Tape& t) {
        const SparseMatrix& A = *ap;
        const Tensor& H = t.value(h);
        if (t.requires_grad(h)) {
          Tensor gh(H.rows(), H.cols());
          for (std::size_t b = 0; b < blocks.size(); ++b) {
            const auto mask = std::span<const double>(t.value(mask_vars[b]).data());
            const std::size_t c0 = blocks[b].begin, w = blocks[b].width();
            for (std::size_t r = 0; r < A.n_rows; ++r) {
              const double* gr = g.row(r).data() + c0;
              for (std::size_t e = A.row_ptr[r]; e < A.row_ptr[r + 1]; ++e) {
                const double coef = A.values[e] * mask[e];
                if (coef == 0.0) continue;
                double* o = gh.row(A.col_idx[e]).data() + c0;
                for (std::size_t j = 0; j < w; ++j) o[j] += coef * gr[j];
              }
            }
          }
          t.accumulate(h, gh);
        }
        if (!differentiate_mask) return;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
          if (!t.requires_grad(mask_vars[b])) continue;
          const std::size_t c0 = blocks[b].begin, w = blocks[b].width();
          Tensor gm(1, A.nnz());
          for (std::size_t r = 0; r < A.n_rows; ++r) {
            const double* gr = g.row(r).data() + c0;
            for (std::size_t e = A.row_ptr[r]; e < A.row_ptr[r + 1]; ++e) {
              const double* hc = H.row(A.col_idx[e]).data() + c0;
              double dot = 0.0;
              for (std::size_t j = 0; j < w; ++j) dot += gr[j] * hc[j];
              gm[e] = A.values[e] * dot;
            }
          }
          t.accumulate(mask_vars[b], gm);
        }
      },
      "block_masked_spmm");
}

Var record_relu(Tape& tape, Var x) {
  Tensor out = tape.value(x);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return tape.record(
      std::move(out), {x},
      [x](const Tensor& g, Tape& t) {
        const Tensor& xv = t.value(x);
        Tensor gx(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] = xv[i] > 0.0 ? g[i] : 0.0;
        t.accumulate(x, gx);
      },
      "relu");
}

Var record_sigmoid(Tape& tape, Var x) {
  Tensor out = tape.value(x);
  for (double& v : out.data()) v = stable_sigmoid(v);
  const std::size_t self = tape.size();
  return tape.record(
      std::move(out), {x},
      [x, self](const Tensor& g, Tape& t) {
        const Tensor& s = t.value(Var{self});
        Tensor gx(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * s[i] * (1.0 - s[i]);
        t.accumulate(x, gx);
      },
      "sigmoid");
}

Var record_add(Tape& tape, Var x, Var y) {
  require_same_shape(tape.value(x), tape.value(y), "record_add");
  Tensor out = tape.value(x);
  out += tape.value(y);
  return tape.record(
      std::move(out), {x, y},
      [x, y](const Tensor& g, Tape& t) {
        t.accumulate(x, g);
        t.accumulate(y, g);
      },
      "add");
}

Var record_scale(Tape& tape, Var x, double s) {
  Tensor out = tape.value(x);
  out *= s;
  return tape.record(
      std::move(out), {x},
      [x, s](const Tensor& g, Tape& t) {
        Tensor gx = g;
        gx *= s;
        t.accumulate(x, gx);
      },
      "scale");
}

Var record_frobenius_sq(Tape& tape, Var x) {
  return tape.record(
      Tensor::scalar(frobenius_sq(tape.value(x))), {x},
      [x](const Tensor& g, Tape& t) {
        Tensor gx = t.value(x);
        gx *= 2.0 * g.item();
        t.accumulate(x, gx);
      },
      "frobenius_sq");
}

Var record_cols(Tape& tape, Var x, BlockRange r) {
  const Tensor& xv = tape.value(x);
  if (r.begin > r.end || r.end > xv.cols()) {
    throw ContractViolation("record_cols: range out of bounds for " +
                            std::to_string(xv.rows()) + "x" + std::to_string(xv.cols()));
  }
  Tensor out(xv.rows(), r.width());
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    std::copy_n(xv.row(i).data() + r.begin, r.width(), out.row(i).data());
  }
  return tape.record(
      std::move(out), {x},
      [x, r](const Tensor& g, Tape& t) {
        const Tensor& xv = t.value(x);
        Tensor gx(xv.rows(), xv.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
          std::copy_n(g.row(i).data(), r.width(), gx.row(i).data() + r.begin);
        }
        t.accumulate(x, gx);
      },
      "cols");
}

Var record_rows(Tape& tape, Var x, BlockRange r) {
  const Tensor& xv = tape.value(x);
  if (r.begin > r.end || r.end > xv.rows()) {
    throw ContractViolation("record_rows: range out of bounds for " +
                            std::to_string(xv.rows()) + "x" + std::to_string(xv.cols()));
  }
  Tensor out(r.width(), xv.cols());
  std::copy_n(xv.row(r.begin).data(), out.size(), out.data().data());
  return tape.record(
      std::move(out), {x},
      [x, r](const Tensor& g, Tape& t) {
        const Tensor& xv = t.value(x);
        Tensor gx(xv.rows(), xv.cols());
        std::copy_n(g.data().data(), g.size(), gx.row(r.begin).data());
        t.accumulate(x, gx);
      },
      "rows");
}

Var record_mul_const(Tape& tape, Var x, const Tensor& c) {
  require_same_shape(tape.value(x), c, "record_mul_const");
  Tensor out = tape.value(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  return tape.record(
      std::move(out), {x},
      [x, c](const Tensor& g, Tape& t) {
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= c[i];
        t.accumulate(x, gx);
      },
      "mul_const");
}

Var record_add_row(Tape& tape, Var x, Var b) {
  const Tensor& xv = tape.value(x);
  const Tensor& bv = tape.value(b);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ContractViolation("record_add_row: bias must be 1 x " + std::to_string(xv.cols()));
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  }
  return tape.record(
      std::move(out), {x, b},
      [x, b](const Tensor& g, Tape& t) {
        t.accumulate(x, g);
        if (!t.requires_grad(b)) return;
        Tensor gb(1, g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
        }
        t.accumulate(b, gb);
      },
      "add_row");
}

Var record_set_entries(Tape& tape, Var x, std::span<const std::size_t> positions, double value) {
  Tensor out = tape.value(x);
  for (std::size_t p : positions) {
    if (p >= out.size()) throw ContractViolation("record_set_entries: position out of range");
    out[p] = value;
  }
  std::vector<std::size_t> pos(positions.begin(), positions.end());
  return tape.record(
      std::move(out), {x},
      [x, pos](const Tensor& g, Tape& t) {
        Tensor gx = g;
        for (std::size_t p : pos) gx[p] = 0.0;
        t.accumulate(x, gx);
      },
      "set_entries");
}

Var record_log_softmax_rows(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto row = xv.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = row[c] - lse;
  }
  const std::size_t self = tape.size();
  return tape.record(
      std::move(out), {x},
      [x, self](const Tensor& g, Tape& t) {
        const Tensor& y = t.value(Var{self});
        Tensor gx(g.rows(), g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          double gs = 0.0;
          for (std::size_t c = 0; c < g.cols(); ++c) gs += g(r, c);
          for (std::size_t c = 0; c < g.cols(); ++c) gx(r, c) = g(r, c) - std::exp(y(r, c)) * gs;
        }
        t.accumulate(x, gx);
      },
      "log_softmax_rows");
}

Var record_masked_nll(Tape& tape, Var logprobs, std::span<const std::int32_t> labels,
                      std::span<const std::size_t> observed) {
  if (observed.empty()) throw ContractViolation("record_masked_nll: empty observed set");
  const Tensor& lp = tape.value(logprobs);
  double acc = 0.0;
  for (std::size_t v : observed) {
    if (v >= lp.rows() || v >= labels.size()) {
      throw ContractViolation("record_masked_nll: observed node out of range");
    }
    const auto y = labels[v];
    if (y < 0 || static_cast<std::size_t>(y) >= lp.cols()) {
      throw ContractViolation("record_masked_nll: invalid label for node " + std::to_string(v));
    }
    acc -= lp(v, static_cast<std::size_t>(y));
  }
  const double inv = 1.0 / static_cast<double>(observed.size());
  std::vector<std::size_t> obs(observed.begin(), observed.end());
  std::vector<std::int32_t> lab(labels.begin(), labels.end());
  return tape.record(
      Tensor::scalar(acc * inv), {logprobs},
      [logprobs, obs, lab, inv](const Tensor& g, Tape& t) {
        const Tensor& lpv = t.value(logprobs);
        Tensor gx(lpv.rows(), lpv.cols());
        for (std::size_t v : obs) gx(v, static_cast<std::size_t>(lab[v])) -= inv * g.item();
        t.accumulate(logprobs, gx);
      },
      "masked_nll");
}

}  // namespace gdc
