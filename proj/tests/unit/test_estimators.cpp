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

#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <functional>
#include <tuple>
#include <vector>

#include "gdc/estimators.hpp"
#include "gdc/masks.hpp"
#include "gdc/random.hpp"
#include "gdc/sparse.hpp"
#include "gdc/tape.hpp"
#include "gdc/variational.hpp"
#include "gradcheck.hpp"

namespace gdc {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe summarize(const std::vector<double>& xs) {
  double s = 0.0, ss = 0.0;
  for (double x : xs) s += x;
  const double n = static_cast<double>(xs.size());
  const double mean = s / n;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

// Flattened view of a MaskSet in layer, block, entry order.
std::vector<double> flatten(const MaskSet& m) {
  std::vector<double> out;
  for (const auto& layer : m) {
    for (const auto& block : layer) out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

// Exact d/d alpha_l of E[L(z)] with z_e ~ Bernoulli(sigmoid(alpha_{layer(e)}))
// by enumerating every mask.
std::vector<double> enumerate_gradient(const std::function<double(const std::vector<double>&)>& loss,
                                       const std::vector<std::size_t>& layer_of,
                                       const std::vector<double>& alpha) {
  const std::size_t m = layer_of.size();
  std::vector<double> grad(alpha.size(), 0.0);
  std::vector<double> z(m);
  for (std::size_t bits = 0; bits < (std::size_t{1} << m); ++bits) {
    double prob = 1.0;
    for (std::size_t e = 0; e < m; ++e) {
      z[e] = (bits >> e) & 1U ? 1.0 : 0.0;
      const double p = sigmoid(alpha[layer_of[e]]);
      prob *= z[e] == 1.0 ? p : 1.0 - p;
    }
    const double l = loss(z);
    std::vector<double> score(alpha.size(), 0.0);
    for (std::size_t e = 0; e < m; ++e) score[layer_of[e]] += z[e] - sigmoid(alpha[layer_of[e]]);
    for (std::size_t k = 0; k < alpha.size(); ++k) grad[k] += l * prob * score[k];
  }
  return grad;
}

TEST(ArmGradient, ConstantLossIsExactlyZero) {
  Rng rng(3);
  const std::vector<std::size_t> blocks{1, 2}, entries{4, 3};
  const std::vector<double> alpha{0.3, -1.2};
  for (int i = 0; i < 100; ++i) {
    const ArmDraw draw = draw_arm_uniforms(blocks, entries, rng);
    const auto g = arm_gradient([](const MaskSet&) { return 1.75; }, draw, alpha);
    for (double v : g) EXPECT_EQ(v, 0.0);
  }
}

TEST(ArmGradient, NonFiniteLossIsAnError) {
  Rng rng(4);
  const std::vector<std::size_t> blocks{1}, entries{2};
  const ArmDraw draw = draw_arm_uniforms(blocks, entries, rng);
  const std::vector<double> alpha{0.0};
  EXPECT_THROW(arm_gradient([](const MaskSet&) { return std::nan(""); }, draw, alpha), Error);
  EXPECT_THROW(arm_combine(1.0, INFINITY, draw), Error);
}

TEST(ArmGradient, LayerCountMismatchIsContractViolation) {
  Rng rng(5);
  const std::vector<std::size_t> blocks{1, 1}, entries{2, 2};
  const ArmDraw draw = draw_arm_uniforms(blocks, entries, rng);
  const std::vector<double> alpha{0.0};
  EXPECT_THROW(arm_pseudo_masks(draw, alpha), ContractViolation);
}

TEST(ArmGradient, SingleEdgeIdentityLoss) {
  // d/d alpha E[z] = sigmoid'(0) = 0.25.
  Rng rng(11);
  const std::vector<std::size_t> blocks{1}, entries{1};
  const std::vector<double> alpha{0.0};
  std::vector<double> est;
  for (int i = 0; i < 100000; ++i) {
    const ArmDraw draw = draw_arm_uniforms(blocks, entries, rng);
    est.push_back(arm_gradient([](const MaskSet& z) { return z[0][0][0]; }, draw, alpha)[0]);
  }
  EXPECT_NEAR(summarize(est).mean, 0.25, 0.005);
}

TEST(ArmGradient, ThreeEdgeQuadraticMatchesEnumeration) {
  const auto loss = [](const std::vector<double>& z) {
    const double s = z[0] + 2.0 * z[1] + 3.0 * z[2] - 2.0;
    return s * s;
  };
  const std::vector<double> alpha{0.4};
  const double exact = enumerate_gradient(loss, {0, 0, 0}, alpha)[0];
  Rng rng(12);
  const std::vector<std::size_t> blocks{1}, entries{3};
  std::vector<double> est;
  for (int i = 0; i < 100000; ++i) {
    const ArmDraw draw = draw_arm_uniforms(blocks, entries, rng);
    est.push_back(
        arm_gradient([&](const MaskSet& z) { return loss(flatten(z)); }, draw, alpha)[0]);
  }
  const MeanSe s = summarize(est);
  EXPECT_LT(std::abs(s.mean - exact), 4.0 * s.se);
  EXPECT_LT(std::abs(s.mean - exact) / std::abs(exact), 0.01) << s.mean << " vs " << exact;
}

TEST(ArmGradient, TwelveVariablesTwoLayersWithinFourStandardErrors) {
  // Layer 0: one block of 6; layer 1: two blocks of 3.
  const std::vector<std::size_t> layer_of{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  const std::vector<double> w{0.5, -1.0, 0.8, 0.3, -0.2, 1.1, 0.7, 0.4, -0.6, 0.9, 0.1, -0.5};
  const auto loss = [&](const std::vector<double>& z) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t e = 0; e < 6; ++e) s0 += w[e] * z[e];
    for (std::size_t e = 6; e < 12; ++e) s1 += w[e] * z[e];
    return (s0 * s1 - 0.3) * (s0 * s1 - 0.3) + std::sin(s0 + 0.5 * s1);
  };
  const std::vector<double> alpha{-0.7, 1.1};
  const auto exact = enumerate_gradient(loss, layer_of, alpha);
  Rng rng(13);
  const std::vector<std::size_t> blocks{1, 2}, entries{6, 3};
  std::vector<std::vector<double>> est(2);
  for (int i = 0; i < 100000; ++i) {
    const ArmDraw draw = draw_arm_uniforms(blocks, entries, rng);
    const auto g = arm_gradient([&](const MaskSet& z) { return loss(flatten(z)); }, draw, alpha);
    est[0].push_back(g[0]);
    est[1].push_back(g[1]);
  }
  for (std::size_t l = 0; l < 2; ++l) {
    const MeanSe s = summarize(est[l]);
    EXPECT_LT(std::abs(s.mean - exact[l]), 4.0 * s.se) << "layer " << l;
  }
}

TEST(ArmPseudoMasks, ReusesTheSameUniforms) {
  Rng rng(14);
  const std::vector<std::size_t> blocks{2}, entries{50};
  const ArmDraw draw = draw_arm_uniforms(blocks, entries, rng);
  const std::vector<double> alpha{0.8};
  const ArmPseudoMasks m = arm_pseudo_masks(draw, alpha);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t e = 0; e < 50; ++e) {
      const double u = draw.u[0][b][e];
      EXPECT_EQ(m.z1[0][b][e], u > sigmoid(-0.8) ? 1.0 : 0.0);
      EXPECT_EQ(m.z2[0][b][e], u < sigmoid(0.8) ? 1.0 : 0.0);
    }
  }
}

TEST(ArmPseudoMasks, Symmetries) {
  // Negating alpha complements the pseudo-masks with their roles exchanged;
  // reflecting u -> 1 - u exchanges them outright, which flips both the loss
  // difference and sum(u - 1/2), leaving the estimate unchanged.
  Rng rng(15);
  const std::vector<std::size_t> blocks{1}, entries{40};
  const ArmDraw draw = draw_arm_uniforms(blocks, entries, rng);
  ArmDraw reflected = draw;
  for (double& u : reflected.u[0][0]) u = 1.0 - u;
  const std::vector<double> alpha{0.6}, neg{-0.6};
  const ArmPseudoMasks m = arm_pseudo_masks(draw, alpha);
  const ArmPseudoMasks mn = arm_pseudo_masks(draw, neg);
  const ArmPseudoMasks mr = arm_pseudo_masks(reflected, alpha);
  for (std::size_t e = 0; e < 40; ++e) {
    EXPECT_EQ(mn.z1[0][0][e], 1.0 - m.z2[0][0][e]);
    EXPECT_EQ(mn.z2[0][0][e], 1.0 - m.z1[0][0][e]);
    EXPECT_EQ(mr.z1[0][0][e], m.z2[0][0][e]);
    EXPECT_EQ(mr.z2[0][0][e], m.z1[0][0][e]);
  }
  const auto loss = [](const MaskSet& z) {
    double s = 0.0;
    for (std::size_t e = 0; e < z[0][0].size(); ++e) s += (e % 3 + 1.0) * z[0][0][e];
    return s * s / 100.0;
  };
  const double g = arm_gradient(loss, draw, alpha)[0];
  EXPECT_NEAR(arm_gradient(loss, reflected, alpha)[0], g, 1e-12 * std::abs(g));
}

TEST(ArmLogit, DropLogit) {
  EXPECT_DOUBLE_EQ(arm_logit(0.5), 0.0);
  EXPECT_NEAR(sigmoid(arm_logit(0.2)), 0.8, 1e-15);
}

TEST(ChainToKuma, ZeroUpstreamGivesZero) {
  const KumaGradient g = chain_to_kuma(0.0, 1.3, 2.0, 0.4);
  EXPECT_EQ(g.grad_a, 0.0);
  EXPECT_EQ(g.grad_b, 0.0);
}

TEST(ChainToKuma, MatchesFiniteDifferencesOfComposedLogit) {
  for (auto [a, b, u] : {std::tuple{1.0, 1.0, 0.25}, std::tuple{0.7, 3.0, 0.6},
                         std::tuple{2.5, 0.8, 0.1}}) {
    const KumaGradient g = chain_to_kuma(1.0, a, b, u);
    double av = a, bv = b;
    const auto alpha = [&] { return std::log(1.0 - kuma_sample(av, bv, u)) - std::log(kuma_sample(av, bv, u)); };
    EXPECT_LT(oracle::relative_error(g.grad_a, oracle::central_difference(alpha, av, 1e-6)), 1e-6);
    EXPECT_LT(oracle::relative_error(g.grad_b, oracle::central_difference(alpha, bv, 1e-6)), 1e-6);
    const KumaGradient g2 = chain_to_kuma(-2.5, a, b, u);
    EXPECT_NEAR(g2.grad_a, -2.5 * g.grad_a, 1e-12 * std::abs(g.grad_a));
  }
}

TEST(ChainToKuma, ClampedDrawIsFlaggedAndZero) {
  const KumaGradient g = chain_to_kuma(1.0, 50.0, 0.01, 0.5);
  EXPECT_TRUE(g.clamped);
  EXPECT_EQ(g.grad_a, 0.0);
  EXPECT_EQ(g.grad_b, 0.0);
}

TEST(ArmPipeline, KumaGradientMatchesClosedFormExpectation) {
  // Two keep variables with pi ~ Kumaraswamy(a, b). E[L] only needs
  // E[pi] and E[pi^2], which are b B(1 + n/a, b).
  const auto loss = [](double k1, double k2) {
    const double s = k1 + 2.0 * k2 - 1.5;
    return s * s;
  };
  const auto expected_loss = [&](double a, double b) {
    const double m1 = b * boost::math::beta(1.0 + 1.0 / a, b);
    const double m2 = b * boost::math::beta(1.0 + 2.0 / a, b);
    const double p00 = 1.0 - 2.0 * m1 + m2, p01 = m1 - m2, p11 = m2;
    return p00 * loss(0, 0) + p01 * (loss(1, 0) + loss(0, 1)) + p11 * loss(1, 1);
  };
  const double a = 1.5, b = 2.0;
  double av = a, bv = b;
  const double exact_a = oracle::central_difference([&] { return expected_loss(av, b); }, av, 1e-6);
  const double exact_b = oracle::central_difference([&] { return expected_loss(a, bv); }, bv, 1e-6);

  Rng rng(21);
  const std::vector<std::size_t> blocks{1}, entries{2};
  std::vector<double> ga, gb;
  for (int i = 0; i < 200000; ++i) {
    const double u_pi = rng.uniform();
    const double pi = kuma_sample(a, b, u_pi);
    const std::vector<double> alpha{arm_logit(pi)};
    const ArmDraw draw = draw_arm_uniforms(blocks, entries, rng);
    // Pseudo-masks are drop indicators; the loss sees keep = 1 - z.
    const double g_alpha = arm_gradient(
        [&](const MaskSet& z) { return loss(1.0 - z[0][0][0], 1.0 - z[0][0][1]); }, draw, alpha)[0];
    const KumaGradient g = chain_to_kuma(g_alpha, a, b, u_pi);
    ga.push_back(g.grad_a);
    gb.push_back(g.grad_b);
  }
  const MeanSe sa = summarize(ga), sb = summarize(gb);
  EXPECT_LT(std::abs(sa.mean - exact_a), 4.0 * sa.se) << sa.mean << " vs " << exact_a;
  EXPECT_LT(std::abs(sb.mean - exact_b), 4.0 * sb.se) << sb.mean << " vs " << exact_b;
}

// Path graph 0-1-2 with self-loops, normalised.
SparseMatrix toy_operator() {
  const std::vector<Edge> edges{{0, 1}, {1, 2}};
  return normalize(build_adjacency(edges, 3, true));
}

TEST(ConcreteGradient, MatchesFiniteDifferencesAtDefaultTemperature) {
  const SparseMatrix a = toy_operator();
  Rng rng(31);
  std::vector<double> uniforms(a.nnz());
  for (double& u : uniforms) u = rng.uniform();
  const Tensor h(3, 2, {0.3, -1.0, 0.7, 0.2, -0.4, 0.9});
  for (ConcreteForm form : {ConcreteForm::kLogitOverT, ConcreteForm::kStandard}) {
    const oracle::Builder build = [&](Tape& tape, const std::vector<Var>& in) {
      const Var pi = record_kuma_sample(tape, in[0], in[1], 0.37);
      const Var mask = record_concrete_mask(tape, pi, uniforms, 0.67, form, {});
      const Var hw = record_matmul(tape, tape.constant(h), in[2]);
      return record_frobenius_sq(tape, record_masked_spmm(tape, a, mask, hw, true));
    };
    const Tensor w(2, 2, {0.5, -0.3, 0.8, 0.1});
    const oracle::GradCheck r = oracle::check_gradients(
        build, {Tensor::scalar(std::log(1.3)), Tensor::scalar(std::log(2.2)), w}, 1e-6);
    EXPECT_EQ(r.checked, 6U);
    EXPECT_LT(r.max_rel_error, 1e-4);
  }
}

TEST(ConcreteGradient, MaskIndependentLossGivesZero) {
  Tape tape;
  const Var la = tape.leaf(Tensor::scalar(0.0), true);
  const Var lb = tape.leaf(Tensor::scalar(std::log(3.0)), true);
  const Var pi = record_kuma_sample(tape, la, lb, 0.5);
  const std::vector<double> uniforms{0.2, 0.7};
  record_concrete_mask(tape, pi, uniforms, 0.67, ConcreteForm::kLogitOverT, {});
  const Var w = tape.leaf(Tensor(1, 2, {1.0, 2.0}), true);
  const Gradients g = tape.backward(record_frobenius_sq(tape, w));
  EXPECT_EQ(g[la].item(), 0.0);
  EXPECT_EQ(g[lb].item(), 0.0);
}

TEST(ConcreteGradient, HalfKeepIdentityAndNonzeroGradient) {
  // a = b = 1 and u_pi = 0.5 give pi = 0.5, where the literal form returns u.
  Tape tape;
  const Var la = tape.leaf(Tensor::scalar(0.0), true);
  const Var lb = tape.leaf(Tensor::scalar(0.0), true);
  const Var pi = record_kuma_sample(tape, la, lb, 0.5);
  EXPECT_DOUBLE_EQ(tape.value(pi).item(), 0.5);
  const std::vector<double> uniforms{0.3};
  const Var mask = record_concrete_mask(tape, pi, uniforms, 0.67, ConcreteForm::kLogitOverT, {});
  EXPECT_NEAR(tape.value(mask).item(), 0.3, 1e-12);
  // Asymmetric loss (m - 1)^2: dm/dpi = m(1-m)/(t pi(1-pi)) at the identity.
  const Var loss = record_frobenius_sq(tape, record_add(tape, mask, tape.constant(Tensor::scalar(-1.0))));
  const Gradients g = tape.backward(loss);
  const double dm_dpi = 0.3 * 0.7 / (0.67 * 0.25);
  // d pi / d log a at a = b = 1, u = 0.5: pi = 1 - u, so d pi/da = -pi log(pi).
  const double dpi_dloga = -0.5 * std::log(0.5);
  EXPECT_NEAR(g[la].item(), 2.0 * (0.3 - 1.0) * dm_dpi * dpi_dloga, 1e-10);
  EXPECT_NE(g[lb].item(), 0.0);
}

TEST(ConcreteGradient, LargeTemperatureDegradesGracefully) {
  // With the literal placement the pi dependence scales as 1/t, so the
  // pathwise gradient to pi shrinks proportionally and stays finite.
  const std::vector<double> uniforms{0.2, 0.45, 0.8};
  double prev = INFINITY;
  for (double t : {1.0, 10.0, 100.0, 1000.0}) {
    Tape tape;
    const Var pi = tape.leaf(Tensor::scalar(0.7), true);
    const Var mask = record_concrete_mask(tape, pi, uniforms, t, ConcreteForm::kLogitOverT, {});
    const Gradients g = tape.backward(record_frobenius_sq(tape, mask));
    const double d = std::abs(g[pi].item());
    EXPECT_TRUE(std::isfinite(d));
    EXPECT_LT(d, prev);
    if (t >= 100.0) EXPECT_NEAR(d * t, prev * t / 10.0, 0.02 * d * t);
    prev = d;
  }
}

}  // namespace
}  // namespace gdc
