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

#include "gdc/model.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "gdc/error.hpp"

namespace gdc {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

std::string layer_str(std::size_t l) { return "layer " + std::to_string(l); }

// Turns a binary keep mask into the multiplier that reproduces N(A ⊙ Z) when
// applied to the pre-normalized adjacency.
std::vector<double> renormalized_multiplier(const Graph& graph, const std::vector<double>& keep,
                                            Normalization mode) {
  std::vector<double> v = normalize_masked(graph.edges, keep, mode);
  for (std::size_t e = 0; e < v.size(); ++e) v[e] /= graph.normalized.values[e];
  return v;
}

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::kNone: return "none";
    case Estimator::kConcrete: return "concrete";
    case Estimator::kArm: return "arm";
  }
  return "none";
}

Estimator parse_estimator(std::string_view name) {
  for (Estimator e : {Estimator::kNone, Estimator::kConcrete, Estimator::kArm}) {
    if (to_string(e) == name) return e;
  }
  throw ContractViolation("unknown estimator '" + std::string(name) + "'");
}

bool GcnConfig::any_learned() const {
  for (const auto& s : layers) {
    if (s.learned) return true;
  }
  return false;
}

void GcnConfig::validate() const {
  if (layer_dims.size() < 2) throw ContractViolation("GcnConfig: need at least two layer dims");
  for (std::size_t d : layer_dims) {
    if (d == 0) throw ContractViolation("GcnConfig: layer dims must be positive");
  }
  if (layers.size() != n_layers()) {
    throw ContractViolation("GcnConfig: " + std::to_string(layers.size()) +
                            " regularizer specs for " + std::to_string(n_layers()) + " layers");
  }
  if (!(beta_prior_c > 0.0)) throw ContractViolation("GcnConfig: beta_prior_c must be > 0");
  if (!(kuma_init_b > 0.0)) throw ContractViolation("GcnConfig: kuma_init_b must be > 0");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const MaskSpec& s = layers[l];
    s.validate(layer_dims[l]);
    if (s.learned && estimator == Estimator::kNone) {
      throw ContractViolation("GcnConfig: " + layer_str(l) +
                              " learns its keep probability but no estimator is selected");
    }
    if (s.learned && estimator == Estimator::kConcrete && !(s.temperature > 0.0)) {
      throw ContractViolation("GcnConfig: concrete estimator needs temperature > 0");
    }
    if (s.learned && estimator == Estimator::kArm && (s.symmetric || protect_self_loops)) {
      throw ContractViolation("GcnConfig: the ARM estimator needs independent mask entries "
                              "(asymmetric masks, unprotected self-loops)");
    }
    if (renormalize_after_mask && uses_edge_mask(s.kind)) {
      if (!s.symmetric) {
        throw ContractViolation("GcnConfig: renormalize_after_mask requires symmetric masks");
      }
      if (s.learned && estimator == Estimator::kConcrete) {
        throw ContractViolation(
            "GcnConfig: renormalize_after_mask is not supported with relaxed masks");
      }
    }
  }
}

double DropParams::expected_keep() const {
  return learned ? kuma_mean(kuma.a(), kuma.b()) : keep_prob;
}

ModelParams init_params(const GcnConfig& config, Rng& rng) {
  config.validate();
  ModelParams params(config.n_layers());
  for (std::size_t l = 0; l < params.size(); ++l) {
    const std::size_t fin = config.layer_dims[l], fout = config.layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fin + fout));
    params[l].weight = Tensor(fin, fout);
    for (double& w : params[l].weight.data()) w = (2.0 * rng.uniform() - 1.0) * bound;
    if (config.use_bias) params[l].bias = Tensor(1, fout);
    const MaskSpec& s = config.layers[l];
    params[l].drop.learned = s.learned;
    params[l].drop.keep_prob = s.keep_prob;
    params[l].drop.kuma = KumaraswamyParams::from_ab(1.0, config.kuma_init_b);
  }
  return params;
}

std::vector<Tensor*> parameter_tensors(ModelParams& params) {
  std::vector<Tensor*> out;
  for (auto& p : params) {
    out.push_back(&p.weight);
    if (!p.bias.empty()) out.push_back(&p.bias);
    if (p.drop.learned) {
      out.push_back(&p.drop.kuma.log_a);
      out.push_back(&p.drop.kuma.log_b);
    }
  }
  return out;
}

Graph Graph::build(const SparseMatrix& adjacency, Normalization mode) {
  Graph g;
  g.adjacency = adjacency;
  g.normalized = normalize(adjacency, mode);
  g.edges = EdgeSet(g.normalized);
  return g;
}

ForwardNoise draw_forward_noise(const GcnConfig& config, const Graph& graph, Rng& rng) {
  const std::size_t n = graph.edges.n_nodes();
  ForwardNoise noise(config.n_layers());
  for (std::size_t l = 0; l < noise.size(); ++l) {
    const MaskSpec& s = config.layers[l];
    LayerNoise& ln = noise[l];
    ln.u_pi = rng.uniform();
    if (uses_edge_mask(s.kind)) {
      for (std::size_t b = 0; b < s.n_blocks; ++b) {
        ln.edge_u.push_back(draw_edge_uniforms(graph.edges, s.symmetric, rng));
      }
    }
    if (s.kind == MaskKind::kNodeSampling) {
      ln.feature_u = Tensor(n, 1);
    } else if (uses_feature_mask(s.kind)) {
      ln.feature_u = Tensor(n, config.layer_dims[l]);
    }
    for (double& v : ln.feature_u.data()) v = rng.uniform();
  }
  return noise;
}

ForwardPass forward(Tape& tape, const ModelParams& params, const Tensor& x, const Graph& graph,
                    const GcnConfig& config, const ForwardNoise& noise,
                    const ForwardOptions& options) {
  const std::size_t L = config.n_layers();
  if (params.size() != L || noise.size() != L) {
    throw ContractViolation("forward: parameter/noise layer count does not match the config");
  }
  if (x.cols() != config.layer_dims[0] || x.rows() != graph.edges.n_nodes()) {
    throw ContractViolation("forward: input is " + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + ", expected " +
                            std::to_string(graph.edges.n_nodes()) + "x" +
                            std::to_string(config.layer_dims[0]));
  }
  if (options.edge_keep_override != nullptr && options.edge_keep_override->size() != L) {
    throw ContractViolation("forward: edge mask override must have one entry per layer");
  }
  const EdgeSet& edges = graph.edges;
  const std::size_t nnz = edges.size();
  const std::size_t n = edges.n_nodes();
  const auto diag = config.protect_self_loops ? diagonal_positions(edges)
                                              : std::vector<std::size_t>{};

  ForwardPass pass;
  pass.keep.resize(L);
  pass.keep_clamped.assign(L, false);
  std::vector<double> prev_walk(nnz, 1.0);

  Var h = tape.constant(x);
  for (std::size_t l = 0; l < L; ++l) {
    const MaskSpec& spec = config.layers[l];
    const LayerParams& p = params[l];
    const std::size_t in_w = config.layer_dims[l], out_w = config.layer_dims[l + 1];
    if (p.weight.rows() != in_w || p.weight.cols() != out_w) {
      throw ContractViolation("forward: weight shape mismatch at " + layer_str(l));
    }
    if (p.drop.learned != spec.learned) {
      throw ContractViolation("forward: parameters and config disagree on learned keep "
                              "probability at " + layer_str(l));
    }

    Var w = tape.leaf(p.weight, true);
    pass.weight.push_back(w);
    Var b;
    if (!p.bias.empty()) b = tape.leaf(p.bias, true);
    pass.bias.push_back(b);

    Var pi_var;
    Var log_a, log_b;
    double keep = p.drop.keep_prob;
    if (spec.learned) {
      log_a = tape.leaf(p.drop.kuma.log_a, true);
      log_b = tape.leaf(p.drop.kuma.log_b, true);
      if (options.mode == MaskMode::kExpected) {
        keep = p.drop.expected_keep();
      } else {
        bool clamped = false;
        pi_var = record_kuma_sample(tape, log_a, log_b, noise[l].u_pi, &clamped);
        pass.keep_clamped[l] = clamped;
        keep = tape.value(pi_var).item();
      }
    }
    pass.log_a.push_back(log_a);
    pass.log_b.push_back(log_b);
    pass.keep[l] = keep;

    Var h_in = h;
    if (uses_feature_mask(spec.kind)) {
      const double fk = spec.feature_keep_prob;
      Tensor fm(n, in_w, fk);
      if (options.mode != MaskMode::kExpected) {
        const Tensor& u = noise[l].feature_u;
        const bool per_node = spec.kind == MaskKind::kNodeSampling;
        if (u.rows() != n || u.cols() != (per_node ? 1 : in_w)) {
          throw ContractViolation("forward: feature noise shape mismatch at " + layer_str(l));
        }
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < in_w; ++c) {
            fm(r, c) = (per_node ? u(r, 0) : u(r, c)) < fk ? 1.0 : 0.0;
          }
        }
      }
      h_in = record_mul_const(tape, h, fm);
    }

    std::vector<Var> masks;
    bool differentiate_mask = false;
    if (uses_edge_mask(spec.kind)) {
      const bool overridden =
          options.edge_keep_override != nullptr && !(*options.edge_keep_override)[l].empty();
      std::vector<std::vector<double>> constant_masks;
      if (overridden) {
        constant_masks = (*options.edge_keep_override)[l];
        if (constant_masks.size() != spec.n_blocks) {
          throw ContractViolation("forward: override block count mismatch at " + layer_str(l));
        }
      } else if (options.mode == MaskMode::kRelaxed && spec.learned) {
        for (std::size_t blk = 0; blk < spec.n_blocks; ++blk) {
          masks.push_back(record_concrete_mask(tape, pi_var, noise[l].edge_u.at(blk),
                                               spec.temperature, config.concrete_form, diag));
        }
        differentiate_mask = true;
      } else if (options.mode == MaskMode::kExpected) {
        std::vector<double> m(nnz, keep);
        for (std::size_t e : diag) m[e] = 1.0;
        constant_masks.assign(spec.n_blocks, m);
      } else {
        if (noise[l].edge_u.size() != spec.n_blocks) {
          throw ContractViolation("forward: edge noise block count mismatch at " + layer_str(l));
        }
        for (std::size_t blk = 0; blk < spec.n_blocks; ++blk) {
          if (spec.kind == MaskKind::kRandomWalk) {
            constant_masks.push_back(randomwalk_from_uniforms(
                edges, noise[l].edge_u[blk], keep, prev_walk, config.protect_self_loops));
          } else {
            constant_masks.push_back(keep_from_uniforms(edges, noise[l].edge_u[blk], keep,
                                                        config.protect_self_loops));
          }
        }
      }
      if (spec.kind == MaskKind::kRandomWalk && !constant_masks.empty()) {
        prev_walk = constant_masks[0];
      } else {
        std::fill(prev_walk.begin(), prev_walk.end(), 1.0);
      }
      for (auto& m : constant_masks) {
        if (m.size() != nnz) throw ContractViolation("forward: edge mask length mismatch");
        if (config.renormalize_after_mask) {
          m = renormalized_multiplier(graph, m, config.normalization);
        }
        masks.push_back(tape.constant(Tensor(1, nnz, std::move(m))));
      }
    } else {
      std::fill(prev_walk.begin(), prev_walk.end(), 1.0);
      masks.push_back(tape.constant(Tensor(1, nnz, 1.0)));
    }

    Var z;
    if (masks.size() == 1 && out_w < in_w) {
      // One shared mask: (A ⊙ Z)(H W) is cheaper when the layer narrows.
      z = record_masked_spmm(tape, graph.normalized, masks[0], record_matmul(tape, h_in, w),
                             differentiate_mask);
    } else if (out_w < in_w) {
      // sum_b (A ⊙ Z_b)(H_b W_b) keeps every intermediate out_w wide.
      const auto ranges = block_ranges(in_w, masks.size());
      for (std::size_t blk = 0; blk < masks.size(); ++blk) {
        const Var hw = record_matmul(tape, record_cols(tape, h_in, ranges[blk]),
                                     record_rows(tape, w, ranges[blk]));
        const Var part =
            record_masked_spmm(tape, graph.normalized, masks[blk], hw, differentiate_mask);
        z = z.valid() ? record_add(tape, z, part) : part;
      }
    } else {
      z = record_matmul(tape,
                        record_block_masked_spmm(tape, graph.normalized, masks, h_in,
                                                 differentiate_mask),
                        w);
    }
    if (b.valid()) z = record_add_row(tape, z, b);

    if (l + 1 < L) {
      h = record_relu(tape, z);
      if (options.capture_hidden) pass.hidden.push_back(h);
    } else {
      pass.logprobs = record_log_softmax_rows(tape, z);
    }
  }
  return pass;
}

LossTerms record_training_loss(Tape& tape, const ForwardPass& pass,
                               std::span<const std::int32_t> labels,
                               std::span<const std::size_t> observed, const ModelParams& params,
                               const GcnConfig& config, const Graph& graph, double l2_factor,
                               double warmup) {
  LossTerms terms;
  terms.nll = record_masked_nll(tape, pass.logprobs, labels, observed);
  terms.nll_value = tape.value(terms.nll).item();
  Var total = terms.nll;

  Var penalty;
  for (std::size_t l = 0; l < params.size(); ++l) {
    Var sq = record_frobenius_sq(tape, pass.weight[l]);
    if (config.kl_weight_scaling) {
      const double coef =
          static_cast<double>(graph.edges.size()) * params[l].drop.expected_keep() / 2.0;
      sq = record_scale(tape, sq, coef);
    }
    penalty = penalty.valid() ? record_add(tape, penalty, sq) : sq;
  }
  if (!config.kl_weight_scaling) penalty = record_scale(tape, penalty, l2_factor);
  terms.weight_penalty = tape.value(penalty).item();
  if (config.kl_weight_scaling || l2_factor != 0.0) total = record_add(tape, total, penalty);

  const std::size_t L = params.size();
  Var kl_sum;
  for (std::size_t l = 0; l < L; ++l) {
    if (!params[l].drop.learned) continue;
    const auto& k = params[l].drop.kuma;
    terms.kl += kl_kuma_beta(k.a(), k.b(), config.beta_prior_c, L, config.kl_full_series);
    if (warmup > 0.0) {
      Var kl = record_kl_kuma_beta(tape, pass.log_a[l], pass.log_b[l], config.beta_prior_c, L,
                                   config.kl_full_series);
      kl_sum = kl_sum.valid() ? record_add(tape, kl_sum, kl) : kl;
    }
  }
  if (kl_sum.valid()) total = record_add(tape, total, record_scale(tape, kl_sum, warmup));
  terms.total = total;
  return terms;
}

Tensor probabilities(const Tensor& logprobs) {
  Tensor p = logprobs;
  for (double& v : p.data()) v = std::exp(v);
  return p;
}

Tensor predict_expected(const ModelParams& params, const Tensor& x, const Graph& graph,
                        const GcnConfig& config) {
  Tape tape;
  const ForwardNoise noise(config.n_layers());
  ForwardOptions opts;
  opts.mode = MaskMode::kExpected;
  const ForwardPass pass = forward(tape, params, x, graph, config, noise, opts);
  return probabilities(tape.value(pass.logprobs));
}

McPrediction predict_mc(const ModelParams& params, const Tensor& x, const Graph& graph,
                        const GcnConfig& config, std::size_t samples, Rng& rng) {
  if (samples == 0) throw ContractViolation("predict_mc: need at least one sample");
  McPrediction out;
  for (std::size_t s = 0; s < samples; ++s) {
    Tape tape;
    const ForwardNoise noise = draw_forward_noise(config, graph, rng);
    const ForwardPass pass = forward(tape, params, x, graph, config, noise);
    out.samples.push_back(probabilities(tape.value(pass.logprobs)));
  }
  out.mean = Tensor(out.samples[0].rows(), out.samples[0].cols());
  for (const auto& s : out.samples) out.mean += s;
  out.mean *= 1.0 / static_cast<double>(samples);
  return out;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw MalformedInput("cannot write " + path.string());
  os.write("GDCN", 4);
  detail::write_u32(os, kCheckpointVersion);
  detail::write_u32(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    detail::write_u64(os, p.weight.rows());
    detail::write_u64(os, p.weight.cols());
  }
  for (const auto& p : params) {
    for (double v : p.weight.data()) detail::write_f64(os, v);
  }
  for (const auto& p : params) {
    const char learned = p.drop.learned ? 1 : 0;
    os.write(&learned, 1);
    detail::write_f64(os, p.drop.keep_prob);
    detail::write_f64(os, p.drop.kuma.log_a.item());
    detail::write_f64(os, p.drop.kuma.log_b.item());
  }
  const bool has_bias = !params.empty() && !params[0].bias.empty();
  const char hb = has_bias ? 1 : 0;
  os.write(&hb, 1);
  if (has_bias) {
    for (const auto& p : params) {
      for (double v : p.bias.data()) detail::write_f64(os, v);
    }
  }
  if (!os) throw MalformedInput("write failed for " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MalformedInput("cannot open checkpoint " + path.string());
  const char* what = "checkpoint";
  detail::expect_magic(is, "GDCN", what);
  const std::uint32_t version = detail::read_u32(is, what);
  if (version != kCheckpointVersion) {
    throw MalformedInput("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t layers = detail::read_u32(is, what);
  if (layers == 0 || layers > 4096) throw MalformedInput("implausible layer count in checkpoint");
  ModelParams params(layers);
  for (auto& p : params) {
    const auto r = detail::checked_count(detail::read_u64(is, what), 1u << 24, what);
    const auto c = detail::checked_count(detail::read_u64(is, what), 1u << 24, what);
    detail::checked_count(r * c, 1ull << 30, what);
    p.weight = Tensor(r, c);
  }
  for (auto& p : params) {
    for (double& v : p.weight.data()) v = detail::read_f64(is, what);
  }
  for (auto& p : params) {
    char learned = 0;
    detail::read_exact(is, &learned, 1, what);
    p.drop.learned = learned != 0;
    p.drop.keep_prob = detail::read_f64(is, what);
    p.drop.kuma.log_a = Tensor::scalar(detail::read_f64(is, what));
    p.drop.kuma.log_b = Tensor::scalar(detail::read_f64(is, what));
  }
  char hb = 0;
  detail::read_exact(is, &hb, 1, what);
  if (hb != 0) {
    for (auto& p : params) {
      p.bias = Tensor(1, p.weight.cols());
      for (double& v : p.bias.data()) v = detail::read_f64(is, what);
    }
  }
  return params;
}

void check_params_match(const ModelParams& params, const GcnConfig& config) {
  if (params.size() != config.n_layers()) {
    throw ContractViolation("checkpoint has " + std::to_string(params.size()) +
                            " layers, config expects " + std::to_string(config.n_layers()));
  }
  for (std::size_t l = 0; l < params.size(); ++l) {
    const auto& p = params[l];
    if (p.weight.rows() != config.layer_dims[l] || p.weight.cols() != config.layer_dims[l + 1]) {
      throw ContractViolation("checkpoint " + layer_str(l) + " is " +
                              std::to_string(p.weight.rows()) + "x" +
                              std::to_string(p.weight.cols()) + ", config expects " +
                              std::to_string(config.layer_dims[l]) + "x" +
                              std::to_string(config.layer_dims[l + 1]));
    }
    if (p.drop.learned != config.layers[l].learned) {
      throw ContractViolation("checkpoint " + layer_str(l) +
                              " disagrees with config on learned keep probability");
    }
    if (p.bias.empty() == config.use_bias) {
      throw ContractViolation("checkpoint bias presence disagrees with config");
    }
  }
}

}  // namespace gdc
