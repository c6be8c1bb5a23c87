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

#include <cmath>

#include "gdc/masks.hpp"
#include "gdc/sparse.hpp"
#include "gradcheck.hpp"

namespace gdc {
namespace {

EdgeSet chord_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId v = 0; v < n; ++v) {
    e.emplace_back(v, static_cast<NodeId>((v + 1) % n));
    e.emplace_back(v, static_cast<NodeId>((v + 7) % n));
  }
  return EdgeSet(normalize(build_adjacency(e, n, true)));
}

EdgeSet small_graph() {
  const std::vector<Edge> e{{0, 1}, {1, 2}, {2, 3}, {0, 2}};
  return EdgeSet(normalize(build_adjacency(e, 4, true)));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

TEST(MaskKindNames, RoundTrip) {
  for (MaskKind k : {MaskKind::kNone, MaskKind::kDropOut, MaskKind::kDropEdge,
                     MaskKind::kDropOutDropEdge, MaskKind::kNodeSampling, MaskKind::kGdc,
                     MaskKind::kRandomWalk}) {
    EXPECT_EQ(parse_mask_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_mask_kind("dropconnect"), ContractViolation);
  EXPECT_TRUE(uses_edge_mask(MaskKind::kDropOutDropEdge));
  EXPECT_TRUE(uses_feature_mask(MaskKind::kDropOutDropEdge));
  EXPECT_FALSE(uses_edge_mask(MaskKind::kNodeSampling));
  EXPECT_TRUE(uses_feature_mask(MaskKind::kNodeSampling));
}

TEST(MaskSpecValidate, Rules) {
  MaskSpec s;
  s.kind = MaskKind::kDropEdge;
  s.n_blocks = 2;
  EXPECT_THROW(s.validate(8), ContractViolation);
  s.kind = MaskKind::kGdc;
  EXPECT_NO_THROW(s.validate(8));
  s.n_blocks = 9;
  EXPECT_THROW(s.validate(8), ContractViolation);
  s.n_blocks = 1;
  s.kind = MaskKind::kDropOut;
  s.learned = true;
  EXPECT_THROW(s.validate(8), ContractViolation);
  s.kind = MaskKind::kGdc;
  s.keep_prob = 1.5;
  s.learned = false;
  EXPECT_THROW(s.validate(8), ContractViolation);
}

TEST(DropoutMask, Extremes) {
  Rng rng(1);
  EXPECT_EQ(sample_dropout_mask(5, 4, 1.0, rng), Tensor(5, 4, 1.0));
  EXPECT_EQ(sample_dropout_mask(5, 4, 0.0, rng), Tensor(5, 4, 0.0));
}

TEST(DropoutMask, EmpiricalMean) {
  Rng rng(2);
  const Tensor m = sample_dropout_mask(1000, 1000, 0.7, rng);
  EXPECT_NEAR(mean_of(m.data()), 0.7, 0.002);
  for (double v : m.data()) EXPECT_TRUE(v == 0.0 || v == 1.0);
}

TEST(DropEdgeMask, KeepOneIsAllOnes) {
  Rng rng(3);
  const EdgeSet es = small_graph();
  const EdgeMask m = sample_dropedge_mask(es, 1.0, false, rng);
  ASSERT_EQ(m.n_blocks(), 1u);
  EXPECT_EQ(m.blocks[0], std::vector<double>(es.size(), 1.0));
}

TEST(DropEdgeMask, SymmetricAndFrequency) {
  Rng rng(4);
  const EdgeSet es = chord_graph(50000);
  const EdgeMask m = sample_dropedge_mask(es, 0.8, true, rng);
  std::size_t kept = 0, undirected = 0;
  for (std::size_t e = 0; e < es.size(); ++e) {
    EXPECT_EQ(m.blocks[0][e], m.blocks[0][es.mirror(e)]);
    if (es.row(e) < es.col(e)) {
      ++undirected;
      kept += m.blocks[0][e] > 0.0 ? 1 : 0;
    }
  }
  EXPECT_EQ(undirected, 100000u);
  EXPECT_NEAR(static_cast<double>(kept) / static_cast<double>(undirected), 0.8, 0.01);
}

TEST(DropEdgeMask, FrequencyWithinFourSigma) {
  Rng rng(5);
  const EdgeSet es = chord_graph(20000);
  for (double p : {0.1, 0.5, 0.9}) {
    const auto m = sample_dropedge_mask(es, p, false, rng).blocks[0];
    const double n = static_cast<double>(m.size());
    EXPECT_LT(std::abs(mean_of(m) - p), 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST(DropEdgeMask, ProtectedSelfLoops) {
  Rng rng(6);
  const EdgeSet es = small_graph();
  const EdgeMask m = sample_dropedge_mask(es, 0.0, false, rng, true);
  for (std::size_t e = 0; e < es.size(); ++e) {
    EXPECT_EQ(m.blocks[0][e], es.is_diagonal(e) ? 1.0 : 0.0);
  }
}

TEST(NodeMask, KeepOneAndFrequencyAndBroadcast) {
  Rng rng(7);
  EXPECT_EQ(sample_node_mask(10, 1.0, rng), std::vector<double>(10, 1.0));
  const auto m = sample_node_mask(200000, 0.3, rng);
  EXPECT_LT(std::abs(mean_of(m) - 0.3), 4.0 * std::sqrt(0.3 * 0.7 / 200000.0));
  const std::vector<double> z{1.0, 0.0, 1.0};
  const Tensor f = node_mask_as_feature_mask(z, 2);
  EXPECT_EQ(f, Tensor(3, 2, std::vector<double>{1, 1, 0, 0, 1, 1}));
}

TEST(GdcMasks, OneBlockIsDropEdgeStream) {
  const EdgeSet es = chord_graph(100);
  for (bool sym : {false, true}) {
    Rng r1(8), r2(8);
    const EdgeMask de = sample_dropedge_mask(es, 0.6, sym, r1);
    const EdgeMask gdc = sample_gdc_masks(es, 1, 0.6, sym, r2);
    EXPECT_EQ(de.blocks, gdc.blocks);
  }
}

TEST(GdcMasks, BlocksAreIndependentAndSymmetric) {
  Rng rng(9);
  const EdgeSet es = chord_graph(2000);
  const EdgeMask m = sample_gdc_masks(es, 3, 0.5, true, rng);
  ASSERT_EQ(m.n_blocks(), 3u);
  EXPECT_NE(m.blocks[0], m.blocks[1]);
  for (const auto& b : m.blocks) {
    for (std::size_t e = 0; e < es.size(); ++e) EXPECT_EQ(b[e], b[es.mirror(e)]);
  }
}

TEST(RandomWalkMask, PrevOnesMatchesDropEdge) {
  const EdgeSet es = chord_graph(100);
  Rng r1(10), r2(10);
  EdgeMask ones;
  ones.blocks.assign(1, std::vector<double>(es.size(), 1.0));
  EXPECT_EQ(sample_randomwalk_mask(es, 0.5, ones, r1).blocks,
            sample_dropedge_mask(es, 0.5, false, r2).blocks);
}

TEST(RandomWalkMask, PrevZerosGiveZeros) {
  Rng rng(11);
  const EdgeSet es = small_graph();
  EdgeMask zeros;
  zeros.blocks.assign(1, std::vector<double>(es.size(), 0.0));
  EXPECT_EQ(sample_randomwalk_mask(es, 0.9, zeros, rng).blocks[0],
            std::vector<double>(es.size(), 0.0));
}

TEST(RandomWalkMask, ChainWithIsolatedNode) {
  const std::vector<Edge> chain{{0, 1}, {1, 2}, {2, 3}};
  const EdgeSet es(normalize(build_adjacency(chain, 4, true)));
  // prev keeps everything except row 2, so node 2 aggregated nothing.
  std::vector<double> prev(es.size(), 1.0);
  for (std::size_t e = 0; e < es.size(); ++e) {
    if (es.row(e) == 2) prev[e] = 0.0;
  }
  std::vector<double> u(es.size(), 0.25);
  const auto m = randomwalk_from_uniforms(es, u, 0.5, prev, false);
  for (std::size_t e = 0; e < es.size(); ++e) {
    // Direct indicator: alive(row) && u < keep.
    const bool alive = es.row(e) != 2;
    EXPECT_EQ(m[e], alive ? 1.0 : 0.0) << "entry " << e;
  }
}

TEST(ConcreteValue, HalfKeepReturnsUniform) {
  for (double u : {0.01, 0.3, 0.5, 0.77, 0.999}) {
    EXPECT_NEAR(concrete_value(0.5, u, 0.67, ConcreteForm::kLogitOverT), u, 1e-12);
    const double tempered = 1.0 / (1.0 + std::exp(-std::log(u / (1.0 - u)) / 0.67));
    EXPECT_NEAR(concrete_value(0.5, u, 0.67, ConcreteForm::kStandard), tempered, 1e-12);
  }
}

TEST(ConcreteValue, MeanAtHalfKeep) {
  Rng rng(12);
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += concrete_value(0.5, rng.uniform(), 0.67, ConcreteForm::kLogitOverT);
  EXPECT_NEAR(s / n, 0.5, 0.005);
}

TEST(ConcreteValue, LowTemperatureConcentration) {
  // At t = 0.01 and pi = 0.9 the literal form is essentially always within
  // 1e-3 of {0,1}: logit(0.9)/t = 219.7 dwarfs logit(u). The standard form
  // misses only when |logit(0.9) + logit(u)| < t * logit(0.999), i.e. for u
  // in (0.0939, 0.1064), about 1.25 % of draws.
  Rng rng(13);
  const int n = 200000;
  int literal = 0, standard = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double a = concrete_value(0.9, u, 0.01, ConcreteForm::kLogitOverT);
    const double b = concrete_value(0.9, u, 0.01, ConcreteForm::kStandard);
    literal += (a < 1e-3 || a > 1.0 - 1e-3) ? 1 : 0;
    standard += (b < 1e-3 || b > 1.0 - 1e-3) ? 1 : 0;
  }
  const double lo = 1.0 / (1.0 + std::exp(-(std::log(0.999 / 0.001) * 0.01 * -1.0 - std::log(9.0))));
  const double hi = 1.0 / (1.0 + std::exp(-(std::log(0.999 / 0.001) * 0.01 - std::log(9.0))));
  const double expect_standard = 1.0 - (hi - lo);
  EXPECT_GT(static_cast<double>(literal) / n, 0.999);
  EXPECT_NEAR(static_cast<double>(standard) / n, expect_standard, 4.0 * std::sqrt(0.0125 / n));
  EXPECT_NEAR(expect_standard, 0.9875, 5e-4);
}

TEST(ConcreteMask, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  std::vector<double> u(6);
  for (double& v : u) v = rng.uniform();
  const std::vector<double> w{0.3, -1.2, 0.8, 2.0, -0.4, 1.1};
  for (ConcreteForm form : {ConcreteForm::kLogitOverT, ConcreteForm::kStandard}) {
    const auto r = oracle::check_gradients(
        [&](Tape& t, const std::vector<Var>& v) {
          const std::vector<std::size_t> none;
          Var m = record_concrete_mask(t, v[0], u, 0.67, form, none);
          return record_frobenius_sq(t, record_mul_const(t, m, Tensor(1, 6, w)));
        },
        {Tensor::scalar(0.35)});
    EXPECT_LT(r.max_rel_error, 1e-6);
  }
}

TEST(ConcreteMask, ProtectedEntriesAndErrors) {
  Tape tape;
  Var pi = tape.leaf(Tensor::scalar(0.3), true);
  const std::vector<double> u{0.2, 0.6, 0.9};
  const std::vector<std::size_t> protect{1};
  const Tensor m = tape.value(record_concrete_mask(tape, pi, u, 0.5, ConcreteForm::kLogitOverT,
                                                   protect));
  EXPECT_EQ(m[1], 1.0);
  EXPECT_NEAR(m[0], concrete_value(0.3, 0.2, 0.5, ConcreteForm::kLogitOverT), 1e-15);
  Var bad = tape.leaf(Tensor::scalar(1.0), true);
  EXPECT_THROW(record_concrete_logits(tape, bad, u, 0.5, ConcreteForm::kLogitOverT),
               ContractViolation);
  EXPECT_THROW(record_concrete_logits(tape, pi, u, 0.0, ConcreteForm::kLogitOverT),
               ContractViolation);
}

TEST(ConcreteMask, SymmetricSamplesMirror) {
  Rng rng(15);
  const EdgeSet es = small_graph();
  Tape tape;
  Var pi = tape.leaf(Tensor::scalar(0.6), true);
  const auto masks = sample_concrete_mask(tape, es, 2, pi, 0.67, rng, ConcreteForm::kLogitOverT,
                                          true, true);
  ASSERT_EQ(masks.size(), 2u);
  for (Var m : masks) {
    const Tensor& v = tape.value(m);
    for (std::size_t e = 0; e < es.size(); ++e) {
      EXPECT_EQ(v[e], v[es.mirror(e)]);
      if (es.is_diagonal(e)) EXPECT_EQ(v[e], 1.0);
    }
  }
}

}  // namespace
}  // namespace gdc
