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

// Kernels and one full training step on a citation-sized synthetic graph
// (2708 nodes, 1433 sparse features, 7 classes).

#include <benchmark/benchmark.h>

#include <vector>

#include "gdc/dataset.hpp"
#include "gdc/model.hpp"
#include "gdc/random.hpp"
#include "gdc/sparse.hpp"
#include "gdc/trainer.hpp"

namespace gdc {
namespace {

struct Fixture {
  Dataset data;
  Graph graph;

  Fixture() {
    SbmOptions o;
    o.n_nodes = 2708;
    o.n_classes = 7;
    o.n_features = 1433;
    o.p_in = 0.0035;
    o.p_out = 0.0002;
    o.words_per_node = 18;
    Rng rng(1);
    data = make_sbm(o, rng);
    data.features = row_normalize(data.features);
    data.split = make_split(data, 20, 500, 1000);
    graph = Graph::build(adjacency_of(data), Normalization::kIdentityPlusSym);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(r, c);
  for (double& v : t.data()) v = rng.uniform() - 0.5;
  return t;
}

void BM_Spmm(benchmark::State& state) {
  const Fixture& f = fixture();
  const Tensor h = random_tensor(f.data.n_nodes(), static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(spmm(f.graph.normalized, h));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.graph.normalized.nnz()) *
                          state.range(0));
}
BENCHMARK(BM_Spmm)->Arg(16)->Arg(128);

void BM_MaskedSpmm(benchmark::State& state) {
  const Fixture& f = fixture();
  const Tensor h = random_tensor(f.data.n_nodes(), 128, 3);
  Rng rng(4);
  std::vector<double> mask(f.graph.normalized.nnz());
  for (double& m : mask) m = rng.bernoulli(0.5) ? 1.0 : 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(masked_spmm(f.graph.normalized, mask, h));
}
BENCHMARK(BM_MaskedSpmm);

void BM_Matmul(benchmark::State& state) {
  const Fixture& f = fixture();
  const Tensor w = random_tensor(f.data.n_features(), 128, 5);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(f.data.features, w));
}
BENCHMARK(BM_Matmul)->Unit(benchmark::kMillisecond);

GcnConfig step_config(bool learned, std::size_t layers) {
  const Fixture& f = fixture();
  GcnConfig c;
  c.layer_dims.push_back(f.data.n_features());
  for (std::size_t l = 1; l < layers; ++l) c.layer_dims.push_back(128);
  c.layer_dims.push_back(f.data.class_count);
  MaskSpec s;
  if (learned) {
    s = {.kind = MaskKind::kGdc, .learned = true, .n_blocks = 2, .relaxed = true};
    c.estimator = Estimator::kConcrete;
  } else {
    s = {.kind = MaskKind::kDropOut, .feature_keep_prob = 0.5};
  }
  c.layers.assign(layers, s);
  return c;
}

// Forward, loss, backward and Adam update.
void BM_TrainStep(benchmark::State& state) {
  const Fixture& f = fixture();
  const GcnConfig c = step_config(state.range(0) != 0, static_cast<std::size_t>(state.range(1)));
  Rng rng(6);
  ModelParams params = init_params(c, rng);
  AdamState adam;
  const ForwardOptions opts{.mode = c.any_learned() ? MaskMode::kRelaxed : MaskMode::kBinary};
  for (auto _ : state) {
    const ForwardNoise noise = draw_forward_noise(c, f.graph, rng);
    Tape tape;
    const ForwardPass pass = forward(tape, params, f.data.features, f.graph, c, noise, opts);
    const LossTerms loss = record_training_loss(tape, pass, f.data.labels, f.data.split.train, params, c,
                                                f.graph, 5e-3, 1.0);
    const Gradients g = tape.backward(loss.total);
    std::vector<Tensor> grads;
    for (std::size_t l = 0; l < c.n_layers(); ++l) {
      grads.push_back(g[pass.weight[l]]);
      if (params[l].drop.learned) {
        grads.push_back(g[pass.log_a[l]]);
        grads.push_back(g[pass.log_b[l]]);
      }
    }
    const std::vector<Tensor*> tensors = parameter_tensors(params);
    benchmark::DoNotOptimize(adam_step(tensors, grads, adam, 0.005));
  }
}
BENCHMARK(BM_TrainStep)
    ->ArgNames({"learned", "layers"})
    ->Args({0, 2})
    ->Args({1, 2})
    ->Args({1, 4})
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace gdc

BENCHMARK_MAIN();
