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

// Gradient estimators for the per-layer keep probabilities.
//
// ARM works on logits alpha_l = logit(1 - pi_l). The Bernoulli variables it
// differentiates are drop indicators d ~ Bernoulli(sigmoid(alpha)) =
// Bernoulli(1 - pi); callers turn an indicator set into keep masks with
// keep = 1 - d. For a layer whose edge variables all share alpha_l, the
// per-variable estimator collapses to
//   g_l = (L(Z1) - L(Z2)) * sum_e (u_e - 1/2),
// with Z1 = 1[u > sigmoid(-alpha)] and Z2 = 1[u < sigmoid(alpha)].

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gdc/random.hpp"

namespace gdc {

/// layer -> block -> entry
using MaskSet = std::vector<std::vector<std::vector<double>>>;

/// Uniform variates for one ARM step, laid out like a MaskSet. The same draw
/// feeds both pseudo-mask evaluations.
struct ArmDraw {
  MaskSet u;

  std::size_t n_layers() const noexcept { return u.size(); }
};

struct ArmPseudoMasks {
  MaskSet z1;  // 1[u > sigmoid(-alpha)]
  MaskSet z2;  // 1[u < sigmoid(alpha)]
};

/// Draws uniforms with the given per-layer block counts and sizes.
ArmDraw draw_arm_uniforms(std::span<const std::size_t> blocks_per_layer,
                          std::span<const std::size_t> entries_per_layer, Rng& rng);

/// Throws ContractViolation if alpha does not have one entry per layer.
ArmPseudoMasks arm_pseudo_masks(const ArmDraw& draw, std::span<const double> alpha);

/// Per-layer estimates from the two loss evaluations. Throws Error if either
/// loss is not finite.
std::vector<double> arm_combine(double loss_z1, double loss_z2, const ArmDraw& draw);

/// Two evaluations of loss_eval (at Z1 then Z2) and the combined estimate.
std::vector<double> arm_gradient(const std::function<double(const MaskSet&)>& loss_eval,
                                 const ArmDraw& draw, std::span<const double> alpha);

struct KumaGradient {
  double grad_a = 0.0;
  double grad_b = 0.0;
  bool clamped = false;
};

/// Chain rule from d/d alpha, alpha = logit(1 - pi), through
/// pi = (1 - u_pi^{1/b})^{1/a} to (d/da, d/db).
KumaGradient chain_to_kuma(double grad_alpha, double a, double b, double u_pi);

/// alpha = logit(1 - pi).
double arm_logit(double pi);

}  // namespace gdc
