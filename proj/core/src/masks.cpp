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

#include "gdc/masks.hpp"

#include <cmath>
#include <string>

#include "gdc/blocks.hpp"
#include "gdc/error.hpp"

namespace gdc {

namespace {

void check_prob(double p, const char* who) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ContractViolation(std::string(who) + ": keep probability " + std::to_string(p) +
                            " outside [0, 1]");
  }
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::kNone: return "none";
    case MaskKind::kDropOut: return "dropout";
    case MaskKind::kDropEdge: return "dropedge";
    case MaskKind::kDropOutDropEdge: return "dropout_dropedge";
    case MaskKind::kNodeSampling: return "node";
    case MaskKind::kGdc: return "gdc";
    case MaskKind::kRandomWalk: return "randomwalk";
  }
  return "none";
}

MaskKind parse_mask_kind(std::string_view name) {
  for (MaskKind k : {MaskKind::kNone, MaskKind::kDropOut, MaskKind::kDropEdge,
                     MaskKind::kDropOutDropEdge, MaskKind::kNodeSampling, MaskKind::kGdc,
                     MaskKind::kRandomWalk}) {
    if (to_string(k) == name) return k;
  }
  throw ContractViolation("unknown regularizer '" + std::string(name) + "'");
}

bool uses_edge_mask(MaskKind kind) {
  return kind == MaskKind::kDropEdge || kind == MaskKind::kDropOutDropEdge ||
         kind == MaskKind::kGdc || kind == MaskKind::kRandomWalk;
}

bool uses_feature_mask(MaskKind kind) {
  return kind == MaskKind::kDropOut || kind == MaskKind::kDropOutDropEdge ||
         kind == MaskKind::kNodeSampling;
}

void MaskSpec::validate(std::size_t in_width) const {
  check_prob(keep_prob, "MaskSpec");
  check_prob(feature_keep_prob, "MaskSpec");
  if (n_blocks == 0) throw ContractViolation("MaskSpec: n_blocks must be >= 1");
  if (n_blocks > in_width) {
    throw ContractViolation("MaskSpec: n_blocks " + std::to_string(n_blocks) +
                            " exceeds layer input width " + std::to_string(in_width));
  }
  if (kind != MaskKind::kGdc && n_blocks != 1) {
    throw ContractViolation("MaskSpec: only gdc supports more than one block");
  }
  if (relaxed && !(temperature > 0.0)) {
    throw ContractViolation("MaskSpec: relaxed masks need temperature > 0");
  }
  if (learned && kind != MaskKind::kDropEdge && kind != MaskKind::kGdc) {
    throw ContractViolation("MaskSpec: learned keep probabilities are supported for dropedge "
                            "and gdc only, not " + std::string(to_string(kind)));
  }
}

std::vector<double> draw_edge_uniforms(const EdgeSet& edges, bool symmetric, Rng& rng) {
  std::vector<double> u(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::size_t m = edges.mirror(e);
    if (symmetric && m < e) {
      u[e] = u[m];
    } else {
      u[e] = rng.uniform();
    }
  }
  return u;
}

std::vector<double> keep_from_uniforms(const EdgeSet& edges, std::span<const double> uniforms,
                                       double keep_prob, bool protect_self_loops) {
  if (uniforms.size() != edges.size()) {
    throw ContractViolation("keep_from_uniforms: uniform count != edge count");
  }
  std::vector<double> z(edges.size());
  for (std::size_t e = 0; e < z.size(); ++e) {
    z[e] = (protect_self_loops && edges.is_diagonal(e)) || uniforms[e] < keep_prob ? 1.0 : 0.0;
  }
  return z;
}

Tensor sample_dropout_mask(std::size_t n, std::size_t f, double keep_prob, Rng& rng) {
  check_prob(keep_prob, "sample_dropout_mask");
  Tensor z(n, f);
  for (double& v : z.data()) v = rng.bernoulli(keep_prob) ? 1.0 : 0.0;
  return z;
}

EdgeMask sample_dropedge_mask(const EdgeSet& edges, double keep_prob, bool symmetric, Rng& rng,
                              bool protect_self_loops) {
  return sample_gdc_masks(edges, 1, keep_prob, symmetric, rng, protect_self_loops);
}

std::vector<double> sample_node_mask(std::size_t n, double keep_prob, Rng& rng) {
  check_prob(keep_prob, "sample_node_mask");
  std::vector<double> z(n);
  for (double& v : z) v = rng.bernoulli(keep_prob) ? 1.0 : 0.0;
  return z;
}

Tensor node_mask_as_feature_mask(std::span<const double> node_mask, std::size_t f) {
  Tensor z(node_mask.size(), f);
  for (std::size_t r = 0; r < node_mask.size(); ++r) {
    for (double& v : z.row(r)) v = node_mask[r];
  }
  return z;
}

EdgeMask sample_gdc_masks(const EdgeSet& edges, std::size_t n_blocks, double keep_prob,
                          bool symmetric, Rng& rng, bool protect_self_loops) {
  check_prob(keep_prob, "sample_gdc_masks");
  if (n_blocks == 0) throw ContractViolation("sample_gdc_masks: n_blocks must be >= 1");
  EdgeMask mask;
  mask.blocks.reserve(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const auto u = draw_edge_uniforms(edges, symmetric, rng);
    mask.blocks.push_back(keep_from_uniforms(edges, u, keep_prob, protect_self_loops));
  }
  return mask;
}

std::vector<double> randomwalk_from_uniforms(const EdgeSet& edges,
                                             std::span<const double> uniforms,
                                             double keep_prob, std::span<const double> prev,
                                             bool protect_self_loops) {
  if (prev.size() != edges.size() || uniforms.size() != edges.size()) {
    throw ContractViolation("randomwalk mask: previous mask not aligned to the edge set");
  }
  const auto& rp = edges.row_ptr();
  std::vector<double> z(edges.size(), 0.0);
  for (std::size_t v = 0; v < edges.n_nodes(); ++v) {
    bool alive = false;
    for (std::size_t e = rp[v]; e < rp[v + 1]; ++e) alive = alive || prev[e] > 0.0;
    for (std::size_t e = rp[v]; e < rp[v + 1]; ++e) {
      if (protect_self_loops && edges.is_diagonal(e)) {
        z[e] = 1.0;
      } else {
        z[e] = alive && uniforms[e] < keep_prob ? 1.0 : 0.0;
      }
    }
  }
  return z;
}

EdgeMask sample_randomwalk_mask(const EdgeSet& edges, double keep_prob, const EdgeMask& prev,
                                Rng& rng, bool protect_self_loops) {
  check_prob(keep_prob, "sample_randomwalk_mask");
  if (prev.n_blocks() != 1) {
    throw ContractViolation("sample_randomwalk_mask: previous mask must have exactly one block");
  }
  const auto u = draw_edge_uniforms(edges, false, rng);
  EdgeMask out;
  out.blocks.push_back(
      randomwalk_from_uniforms(edges, u, keep_prob, prev.blocks[0], protect_self_loops));
  return out;
}

double concrete_value(double pi, double u, double t, ConcreteForm form) {
  const double s = form == ConcreteForm::kStandard ? (logit(pi) + logit(u)) / t
                                                   : logit(pi) / t + logit(u);
  return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

Var record_concrete_logits(Tape& tape, Var pi, std::span<const double> uniforms, double t,
                           ConcreteForm form) {
  const double p = tape.value(pi).item();
  if (!(p > 0.0 && p < 1.0)) {
    throw ContractViolation("concrete relaxation: pi=" + std::to_string(p) +
                            " must lie strictly inside (0, 1)");
  }
  if (!(t > 0.0)) throw ContractViolation("concrete relaxation: temperature must be > 0");
  const double lp = logit(p);
  Tensor out(1, uniforms.size());
  for (std::size_t e = 0; e < uniforms.size(); ++e) {
    const double lu = logit(uniforms[e]);
    out[e] = form == ConcreteForm::kStandard ? (lp + lu) / t : lp / t + lu;
  }
  return tape.record(
      std::move(out), {pi},
      [pi, t](const Tensor& g, Tape& tp) {
        const double pv = tp.value(pi).item();
        double s = 0.0;
        for (double v : g.data()) s += v;
        // d logit(pi)/d pi = 1 / (pi (1 - pi)); both forms scale it by 1/t.
        tp.accumulate(pi, Tensor::scalar(s / (t * pv * (1.0 - pv))));
      },
      "concrete_logits");
}

Var record_concrete_mask(Tape& tape, Var pi, std::span<const double> uniforms, double t,
                         ConcreteForm form, std::span<const std::size_t> protected_positions) {
  Var z = record_sigmoid(tape, record_concrete_logits(tape, pi, uniforms, t, form));
  if (!protected_positions.empty()) z = record_set_entries(tape, z, protected_positions, 1.0);
  return z;
}

std::vector<Var> sample_concrete_mask(Tape& tape, const EdgeSet& edges, std::size_t n_blocks,
                                      Var pi, double t, Rng& rng, ConcreteForm form,
                                      bool symmetric, bool protect_self_loops) {
  if (n_blocks == 0) throw ContractViolation("sample_concrete_mask: n_blocks must be >= 1");
  const auto diag = protect_self_loops ? diagonal_positions(edges) : std::vector<std::size_t>{};
  std::vector<Var> out;
  out.reserve(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const auto u = draw_edge_uniforms(edges, symmetric, rng);
    out.push_back(record_concrete_mask(tape, pi, u, t, form, diag));
  }
  return out;
}

std::vector<std::size_t> diagonal_positions(const EdgeSet& edges) {
  std::vector<std::size_t> d;
  d.reserve(edges.n_nodes());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges.is_diagonal(e)) d.push_back(e);
  }
  return d;
}

}  // namespace gdc
