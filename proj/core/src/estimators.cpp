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

#include "gdc/estimators.hpp"

#include <cmath>
#include <string>

#include "gdc/error.hpp"
#include "gdc/variational.hpp"

namespace gdc {

namespace {

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

ArmDraw draw_arm_uniforms(std::span<const std::size_t> blocks_per_layer,
                          std::span<const std::size_t> entries_per_layer, Rng& rng) {
  if (blocks_per_layer.size() != entries_per_layer.size()) {
    throw ContractViolation("draw_arm_uniforms: layer count mismatch");
  }
  ArmDraw draw;
  draw.u.resize(blocks_per_layer.size());
  for (std::size_t l = 0; l < blocks_per_layer.size(); ++l) {
    draw.u[l].assign(blocks_per_layer[l], std::vector<double>(entries_per_layer[l]));
    for (auto& block : draw.u[l]) {
      for (double& v : block) v = rng.uniform();
    }
  }
  return draw;
}

ArmPseudoMasks arm_pseudo_masks(const ArmDraw& draw, std::span<const double> alpha) {
  if (alpha.size() != draw.n_layers()) {
    throw ContractViolation("arm_pseudo_masks: " + std::to_string(alpha.size()) +
                            " logits for " + std::to_string(draw.n_layers()) + " layers");
  }
  ArmPseudoMasks out;
  out.z1.resize(draw.n_layers());
  out.z2.resize(draw.n_layers());
  for (std::size_t l = 0; l < draw.n_layers(); ++l) {
    const double lo = sigmoid(-alpha[l]);
    const double hi = sigmoid(alpha[l]);
    for (const auto& block : draw.u[l]) {
      std::vector<double> a(block.size()), b(block.size());
      for (std::size_t e = 0; e < block.size(); ++e) {
        a[e] = block[e] > lo ? 1.0 : 0.0;
        b[e] = block[e] < hi ? 1.0 : 0.0;
      }
      out.z1[l].push_back(std::move(a));
      out.z2[l].push_back(std::move(b));
    }
  }
  return out;
}

std::vector<double> arm_combine(double loss_z1, double loss_z2, const ArmDraw& draw) {
  if (!std::isfinite(loss_z1) || !std::isfinite(loss_z2)) {
    throw Error("ARM estimator: non-finite loss evaluation");
  }
  const double delta = loss_z1 - loss_z2;
  std::vector<double> g(draw.n_layers(), 0.0);
  if (delta == 0.0) return g;
  for (std::size_t l = 0; l < draw.n_layers(); ++l) {
    double s = 0.0;
    for (const auto& block : draw.u[l]) {
      for (double u : block) s += u - 0.5;
    }
    g[l] = delta * s;
  }
  return g;
}

std::vector<double> arm_gradient(const std::function<double(const MaskSet&)>& loss_eval,
                                 const ArmDraw& draw, std::span<const double> alpha) {
  const ArmPseudoMasks masks = arm_pseudo_masks(draw, alpha);
  const double l1 = loss_eval(masks.z1);
  const double l2 = loss_eval(masks.z2);
  return arm_combine(l1, l2, draw);
}

double arm_logit(double pi) { return std::log((1.0 - pi) / pi); }

KumaGradient chain_to_kuma(double grad_alpha, double a, double b, double u_pi) {
  const KumaSample s = kuma_sample_partials(a, b, u_pi);
  KumaGradient out;
  out.clamped = s.clamped;
  if (grad_alpha == 0.0 || s.clamped) return out;
  const double dalpha_dpi = -1.0 / (s.pi * (1.0 - s.pi));
  out.grad_a = grad_alpha * dalpha_dpi * s.dpi_da;
  out.grad_b = grad_alpha * dalpha_dpi * s.dpi_db;
  return out;
}

}  // namespace gdc
