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

// Samplers for the stochastic regularizers that fit the connection-sampling
// framework: DropOut, DropEdge, node sampling, block GDC and random-walk
// masks. Throughout, a probability named keep_prob (or pi) is the probability
// that a mask entry is 1; the drop rate is 1 - keep_prob.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gdc/random.hpp"
#include "gdc/sparse.hpp"
#include "gdc/tape.hpp"
#include "gdc/tensor.hpp"

namespace gdc {

enum class MaskKind {
  kNone,
  kDropOut,
  kDropEdge,
  kDropOutDropEdge,
  kNodeSampling,
  kGdc,
  kRandomWalk,
};

std::string_view to_string(MaskKind kind);
/// Throws ContractViolation for an unknown name.
MaskKind parse_mask_kind(std::string_view name);

bool uses_edge_mask(MaskKind kind);
bool uses_feature_mask(MaskKind kind);

/// Regularizer description for one layer.
struct MaskSpec {
  MaskKind kind = MaskKind::kNone;
  bool learned = false;         // keep probability learned (Kumaraswamy posterior)
  std::size_t n_blocks = 1;     // edge-mask blocks over the layer's input features
  bool symmetric = false;       // value(u,v) == value(v,u)
  bool relaxed = false;         // concrete relaxation instead of binary draws
  double temperature = 0.67;
  double keep_prob = 1.0;          // edge keep probability when not learned
  double feature_keep_prob = 1.0;  // DropOut / node-sampling keep probability

  /// Throws ContractViolation if the spec is inconsistent for a layer whose
  /// input has in_width features.
  void validate(std::size_t in_width) const;
};

/// Per-block keep values aligned to an EdgeSet.
struct EdgeMask {
  std::vector<std::vector<double>> blocks;

  std::size_t n_blocks() const noexcept { return blocks.size(); }
};

/// One uniform per edge-set entry; with symmetric, the draw for (u,v) is
/// reused for (v,u). Self-loops get their own draw.
std::vector<double> draw_edge_uniforms(const EdgeSet& edges, bool symmetric, Rng& rng);

/// 1[u < keep_prob] per entry, with diagonal entries forced to 1 when
/// protect_self_loops is set.
std::vector<double> keep_from_uniforms(const EdgeSet& edges, std::span<const double> uniforms,
                                       double keep_prob, bool protect_self_loops);

Tensor sample_dropout_mask(std::size_t n, std::size_t f, double keep_prob, Rng& rng);

EdgeMask sample_dropedge_mask(const EdgeSet& edges, double keep_prob, bool symmetric, Rng& rng,
                              bool protect_self_loops = false);

std::vector<double> sample_node_mask(std::size_t n, double keep_prob, Rng& rng);

/// n x f row-broadcast of a node mask: row v is all node_mask[v].
Tensor node_mask_as_feature_mask(std::span<const double> node_mask, std::size_t f);

/// n_blocks independent DropEdge-style masks; block b gates feature group b
/// of block_ranges(f, n_blocks). Block 0 consumes the same stream as
/// sample_dropedge_mask.
EdgeMask sample_gdc_masks(const EdgeSet& edges, std::size_t n_blocks, double keep_prob,
                          bool symmetric, Rng& rng, bool protect_self_loops = false);

/// Entry (v,u) is a fresh Bernoulli(keep_prob) draw if row v of prev kept at
/// least one entry, and 0 otherwise. prev must have exactly one block.
EdgeMask sample_randomwalk_mask(const EdgeSet& edges, double keep_prob, const EdgeMask& prev,
                                Rng& rng, bool protect_self_loops = false);

/// Same as sample_randomwalk_mask with externally drawn uniforms.
std::vector<double> randomwalk_from_uniforms(const EdgeSet& edges,
                                             std::span<const double> uniforms,
                                             double keep_prob, std::span<const double> prev,
                                             bool protect_self_loops);

/// Temperature placement of the concrete relaxation.
enum class ConcreteForm {
  kLogitOverT,  // sigmoid(logit(pi)/t + logit(u))
  kStandard,    // sigmoid((logit(pi) + logit(u))/t)
};

/// Plain-double relaxed value for one draw.
double concrete_value(double pi, double u, double t, ConcreteForm form);

/// Records the pre-sigmoid concrete logits for one block: a 1 x m row whose
/// entry e depends on the scalar pi (1x1 Var) and the fixed uniform u_e.
/// Throws ContractViolation if pi is not in (0,1) or t <= 0.
Var record_concrete_logits(Tape& tape, Var pi, std::span<const double> uniforms, double t,
                           ConcreteForm form);

/// Relaxed mask for one block from explicit uniforms: sigmoid of the concrete
/// logits, with protected positions pinned to 1.
Var record_concrete_mask(Tape& tape, Var pi, std::span<const double> uniforms, double t,
                         ConcreteForm form, std::span<const std::size_t> protected_positions);

/// n_blocks relaxed masks recorded on the tape so gradients reach pi.
std::vector<Var> sample_concrete_mask(Tape& tape, const EdgeSet& edges, std::size_t n_blocks,
                                      Var pi, double t, Rng& rng, ConcreteForm form,
                                      bool symmetric = false, bool protect_self_loops = false);

/// Diagonal positions of an EdgeSet, in row order.
std::vector<std::size_t> diagonal_positions(const EdgeSet& edges);

}  // namespace gdc
