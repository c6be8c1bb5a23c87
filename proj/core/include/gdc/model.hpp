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
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "gdc/estimators.hpp"
#include "gdc/masks.hpp"
#include "gdc/random.hpp"
#include "gdc/sparse.hpp"
#include "gdc/tape.hpp"
#include "gdc/tensor.hpp"
#include "gdc/variational.hpp"

namespace gdc {

enum class Estimator { kNone, kConcrete, kArm };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

struct GcnConfig {
  std::vector<std::size_t> layer_dims;  // f_0, ..., f_L
  std::vector<MaskSpec> layers;         // one regularizer per weight layer
  Estimator estimator = Estimator::kNone;
  Normalization normalization = Normalization::kIdentityPlusSym;
  ConcreteForm concrete_form = ConcreteForm::kLogitOverT;
  bool protect_self_loops = false;
  bool renormalize_after_mask = false;  // N(A ⊙ Z) instead of N(A) ⊙ Z
  bool use_bias = false;
  bool kl_full_series = false;
  bool kl_weight_scaling = false;
  double beta_prior_c = 2.0;
  double kuma_init_b = 3.0;

  std::size_t n_layers() const noexcept { return layer_dims.empty() ? 0 : layer_dims.size() - 1; }
  bool any_learned() const;

  /// Throws ContractViolation when the combination of settings is invalid.
  void validate() const;
};

struct DropParams {
  bool learned = false;
  double keep_prob = 1.0;  // used when not learned
  KumaraswamyParams kuma;  // used when learned

  /// Keep probability of the deterministic (mean-field) pass.
  double expected_keep() const;
};

struct LayerParams {
  Tensor weight;  // f_l x f_{l+1}
  Tensor bias;    // 1 x f_{l+1}, empty unless the config uses biases
  DropParams drop;
};

using ModelParams = std::vector<LayerParams>;

/// Glorot-uniform weights, zero biases, Kumaraswamy(1, kuma_init_b) for
/// learned layers.
ModelParams init_params(const GcnConfig& config, Rng& rng);

/// Mutable views of every trainable tensor in a fixed order: per layer the
/// weight, then the bias (if any), then log a and log b (if learned).
std::vector<Tensor*> parameter_tensors(ModelParams& params);

/// Raw adjacency together with its normalized form and edge pattern.
struct Graph {
  SparseMatrix adjacency;
  SparseMatrix normalized;
  EdgeSet edges;

  static Graph build(const SparseMatrix& adjacency, Normalization mode);
};

/// Randomness consumed by one forward pass.
struct LayerNoise {
  double u_pi = 0.5;                         // Kumaraswamy draw for learned layers
  std::vector<std::vector<double>> edge_u;   // [block][entry]
  Tensor feature_u;                          // n x f_in (DropOut) or n x 1 (node sampling)
};
using ForwardNoise = std::vector<LayerNoise>;

ForwardNoise draw_forward_noise(const GcnConfig& config, const Graph& graph, Rng& rng);

enum class MaskMode {
  kBinary,    // Bernoulli masks at the layer's keep probability
  kRelaxed,   // concrete masks for learned layers, binary elsewhere
  kExpected,  // deterministic: every mask replaced by its keep probability
};

struct ForwardOptions {
  MaskMode mode = MaskMode::kBinary;
  // Optional per-layer edge keep masks ([layer][block][entry]); a layer with
  // no blocks falls back to the mode.
  const MaskSet* edge_keep_override = nullptr;
  bool capture_hidden = false;
};

struct ForwardPass {
  Var logprobs;
  std::vector<Var> hidden;  // post-activation outputs of hidden layers
  std::vector<Var> weight;
  std::vector<Var> bias;
  std::vector<Var> log_a;   // invalid for fixed layers
  std::vector<Var> log_b;
  std::vector<double> keep;  // edge keep probability used by each layer
  std::vector<bool> keep_clamped;
};

/// Records the layer stack on the tape. Per layer: optional feature mask,
/// per-block masked aggregation over the normalized adjacency, product with
/// the weight, optional bias, ReLU (hidden) or row log-softmax (head).
ForwardPass forward(Tape& tape, const ModelParams& params, const Tensor& x, const Graph& graph,
                    const GcnConfig& config, const ForwardNoise& noise,
                    const ForwardOptions& options = {});

struct LossTerms {
  Var total;
  Var nll;
  double nll_value = 0.0;
  double weight_penalty = 0.0;
  double kl = 0.0;  // sum of per-layer KL, before the warm-up factor
};

/// masked NLL + weight penalty + warmup * sum_l KL_l. The weight penalty is
/// l2_factor * sum ||M||^2, or the |E|-scaled keep-mass term when the config
/// sets kl_weight_scaling. With warmup == 0 no KL node is recorded.
LossTerms record_training_loss(Tape& tape, const ForwardPass& pass,
                               std::span<const std::int32_t> labels,
                               std::span<const std::size_t> observed, const ModelParams& params,
                               const GcnConfig& config, const Graph& graph, double l2_factor,
                               double warmup);

/// Row-wise exp of log-probabilities.
Tensor probabilities(const Tensor& logprobs);

/// Class probabilities from the deterministic pass.
Tensor predict_expected(const ModelParams& params, const Tensor& x, const Graph& graph,
                        const GcnConfig& config);

struct McPrediction {
  Tensor mean;                  // n x C
  std::vector<Tensor> samples;  // S entries of n x C
};

/// S stochastic passes with fresh binary masks (and a fresh keep-probability
/// draw per pass for learned layers).
McPrediction predict_mc(const ModelParams& params, const Tensor& x, const Graph& graph,
                        const GcnConfig& config, std::size_t samples, Rng& rng);

/// Binary layout, little-endian: "GDCN", u32 version, u32 layer count,
/// per-layer (u64 rows, u64 cols), each weight as row-major f64, then per
/// layer (u8 learned, f64 keep_prob, f64 log_a, f64 log_b), then u8 has_bias
/// followed by each bias row when set.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Throws ContractViolation if params do not match the config's shapes.
void check_params_match(const ModelParams& params, const GcnConfig& config);

}  // namespace gdc
