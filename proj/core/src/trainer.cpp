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

#include "gdc/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <ostream>
#include <string>
#include <thread>

#include "gdc/error.hpp"
#include "gdc/estimators.hpp"
#include "gdc/metrics.hpp"
#include "gdc/sparse.hpp"

namespace gdc {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Stream labels for Rng::derive.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kArmStream = 3;

struct StepStats {
  bool finite = false;
  double loss = 0.0;
  double nll = 0.0;
  double kl = 0.0;
};

struct EvalPass {
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::vector<Tensor> hidden;
};

EvalPass eval_pass(const Dataset& ds, const Graph& graph, const GcnConfig& config,
                   const ModelParams& params, bool capture_hidden) {
  Tape tape;
  ForwardOptions opts;
  opts.mode = MaskMode::kExpected;
  opts.capture_hidden = capture_hidden;
  const ForwardPass pass =
      forward(tape, params, ds.features, graph, config, ForwardNoise(config.n_layers()), opts);
  const auto preds = argmax_rows(tape.value(pass.logprobs));
  EvalPass out;
  out.val_acc = accuracy(preds, ds.labels, ds.split.val);
  out.test_acc = accuracy(preds, ds.labels, ds.split.test);
  for (Var h : pass.hidden) out.hidden.push_back(tape.value(h));
  return out;
}

// Gradients in parameter_tensors order.
std::vector<Tensor> collect_grads(const Gradients& g, const ForwardPass& pass,
                                  const ModelParams& params) {
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < params.size(); ++l) {
    out.push_back(g[pass.weight[l]]);
    if (!params[l].bias.empty()) out.push_back(g[pass.bias[l]]);
    if (params[l].drop.learned) {
      out.push_back(g[pass.log_a[l]]);
      out.push_back(g[pass.log_b[l]]);
    }
  }
  return out;
}

// Index of layer l's log_a gradient in parameter_tensors order.
std::size_t log_a_slot(const ModelParams& params, std::size_t layer) {
  std::size_t k = 0;
  for (std::size_t l = 0; l < layer; ++l) {
    k += 1 + (params[l].bias.empty() ? 0 : 1) + (params[l].drop.learned ? 2 : 0);
  }
  return k + 1 + (params[layer].bias.empty() ? 0 : 1);
}

MaskSet keep_from_drop(const MaskSet& drop) {
  MaskSet keep = drop;
  for (auto& layer : keep) {
    for (auto& block : layer) {
      for (double& v : block) v = 1.0 - v;
    }
  }
  return keep;
}

class Trainer {
 public:
  Trainer(const Dataset& ds, const Graph& graph, const GcnConfig& config, const TrainConfig& tc,
          std::uint64_t seed)
      : ds_(ds),
        graph_(graph),
        config_(config),
        tc_(tc),
        noise_rng_(Rng::derive(seed, {kNoiseStream})),
        arm_rng_(Rng::derive(seed, {kArmStream})) {
    Rng init = Rng::derive(seed, {kInitStream});
    params_ = init_params(config, init);
  }

  TrainResult run(std::uint64_t seed) {
    TrainResult res;
    res.seed = seed;
    res.params = params_;
    const auto start = std::chrono::steady_clock::now();
    const double lam = tc_.track_tv ? lambda_max(graph_.adjacency).value : 0.0;
    const std::vector<Tensor*> tensors = parameter_tensors(params_);
    AdamState adam;
    bool have_best = false;
    std::size_t bad_epochs = 0;

    if (tc_.epochs == 0) {
      const EvalPass ev = eval_pass(ds_, graph_, config_, params_, false);
      res.best_val_acc = ev.val_acc;
      res.test_acc = ev.test_acc;
      return res;
    }

    for (std::size_t epoch = 1; epoch <= tc_.epochs; ++epoch) {
      const double warm = config_.any_learned() ? warmup_factor(epoch - 1, tc_.warmup) : 0.0;
      std::vector<Tensor> grads;
      StepStats stats = step(warm, grads);
      if (stats.finite && !adam_step(tensors, grads, adam, tc_.lr)) stats.finite = false;
      EvalPass ev;
      bool eval_ok = true;
      try {
        ev = eval_pass(ds_, graph_, config_, params_, tc_.track_tv);
      } catch (const NonFiniteError&) {
        eval_ok = false;
        stats.finite = false;
      }
      if (!stats.finite) {
        if (++bad_epochs >= tc_.divergence_epochs) {
          throw DivergenceError("training diverged: " + std::to_string(bad_epochs) +
                                " consecutive epochs with non-finite loss or gradients (last "
                                "epoch " + std::to_string(epoch) + ", lr " +
                                format_double(tc_.lr) + ")");
        }
      } else {
        bad_epochs = 0;
      }

      if (!eval_ok) continue;
      EpochLog row;
      row.epoch = epoch;
      row.train_loss = stats.loss;
      row.nll = stats.nll;
      row.kl = stats.kl;
      row.val_acc = ev.val_acc;
      row.test_acc = ev.test_acc;
      for (const auto& p : params_) row.keep.push_back(p.drop.expected_keep());
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      res.log.push_back(std::move(row));
      for (std::size_t h = 0; h < ev.hidden.size(); ++h) {
        const double tv = lam > 0.0 ? total_variation(ev.hidden[h], graph_.adjacency, lam, true)
                                    : 0.0;
        res.tv.push_back({epoch, h, tv});
      }

      if (!have_best || ev.val_acc > res.best_val_acc) {
        have_best = true;
        res.best_val_acc = ev.val_acc;
        res.test_acc = ev.test_acc;
        res.best_epoch = epoch;
        res.params = params_;
      } else if (epoch - res.best_epoch >= tc_.patience) {
        break;
      }
    }
    return res;
  }

 private:
  StepStats step(double warmup, std::vector<Tensor>& grads) {
    StepStats stats;
    const ForwardNoise noise = draw_forward_noise(config_, graph_, noise_rng_);
    const bool arm = config_.estimator == Estimator::kArm && config_.any_learned();
    try {
      Tape tape;
      ForwardOptions opts;
      opts.mode = config_.estimator == Estimator::kConcrete && config_.any_learned()
                      ? MaskMode::kRelaxed
                      : MaskMode::kBinary;
      ArmDraw draw;
      MaskSet keep1, keep2;
      std::vector<double> alpha(config_.n_layers(), 0.0);
      if (arm) {
        std::vector<std::size_t> blocks, entries;
        for (std::size_t l = 0; l < config_.n_layers(); ++l) {
          const bool learned = params_[l].drop.learned;
          blocks.push_back(learned ? config_.layers[l].n_blocks : 0);
          entries.push_back(graph_.edges.size());
          if (learned) {
            const auto& k = params_[l].drop.kuma;
            alpha[l] = arm_logit(kuma_sample(k.a(), k.b(), noise[l].u_pi));
          }
        }
        draw = draw_arm_uniforms(blocks, entries, arm_rng_);
        const ArmPseudoMasks z = arm_pseudo_masks(draw, alpha);
        keep1 = keep_from_drop(z.z1);
        keep2 = keep_from_drop(z.z2);
        opts.edge_keep_override = &keep2;
      }

      const ForwardPass pass = forward(tape, params_, ds_.features, graph_, config_, noise, opts);
      const LossTerms terms = record_training_loss(tape, pass, ds_.labels, ds_.split.train,
                                                   params_, config_, graph_, tc_.l2_factor,
                                                   warmup);
      stats.loss = tape.value(terms.total).item();
      stats.nll = terms.nll_value;
      stats.kl = terms.kl;
      grads = collect_grads(tape.backward(terms.total), pass, params_);

      if (arm) {
        Tape t1;
        ForwardOptions o1;
        o1.edge_keep_override = &keep1;
        const ForwardPass p1 = forward(t1, params_, ds_.features, graph_, config_, noise, o1);
        const double l1 = t1.value(record_masked_nll(t1, p1.logprobs, ds_.labels,
                                                     ds_.split.train)).item();
        const std::vector<double> g_alpha = arm_combine(l1, terms.nll_value, draw);
        for (std::size_t l = 0; l < config_.n_layers(); ++l) {
          if (!params_[l].drop.learned) continue;
          const auto& k = params_[l].drop.kuma;
          const double a = k.a(), b = k.b();
          const KumaGradient kg = chain_to_kuma(g_alpha[l], a, b, noise[l].u_pi);
          const std::size_t slot = log_a_slot(params_, l);
          grads[slot][0] += kg.grad_a * a;
          grads[slot + 1][0] += kg.grad_b * b;
        }
      }
      stats.finite = std::isfinite(stats.loss);
    } catch (const NonFiniteError&) {
      stats.finite = false;
      stats.loss = stats.nll = std::numeric_limits<double>::quiet_NaN();
    }
    return stats;
  }

  const Dataset& ds_;
  const Graph& graph_;
  const GcnConfig& config_;
  const TrainConfig& tc_;
  Rng noise_rng_;
  Rng arm_rng_;
  ModelParams params_;
};

}  // namespace

bool adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size()) throw ContractViolation("adam_step: gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) {
      throw ContractViolation("adam_step: gradient " + std::to_string(i) + " shape mismatch");
    }
    if (!grads[i].all_finite()) return false;
  }
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(kBeta1, t);
  const double c2 = 1.0 - std::pow(kBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i]->data();
    auto& m = state.m[i].data();
    auto& v = state.v[i].data();
    const auto& g = grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
      p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + kAdamEps);
    }
  }
  return true;
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ContractViolation("lr must be finite and >= 0");
  if (!(l2_factor >= 0.0)) throw ContractViolation("l2_factor must be >= 0");
  if (patience == 0) throw ContractViolation("patience must be >= 1");
  if (seeds.empty()) throw ContractViolation("at least one seed is required");
  if (divergence_epochs == 0) throw ContractViolation("divergence_epochs must be >= 1");
  if (warmup.ramp_epochs == 0) throw ContractViolation("warm-up ramp must be >= 1 epoch");
}

EvalResult evaluate(const Dataset& dataset, const Graph& graph, const GcnConfig& config,
                    const ModelParams& params) {
  const EvalPass ev = eval_pass(dataset, graph, config, params, false);
  return {ev.val_acc, ev.test_acc};
}

TrainResult train(const Dataset& dataset, const Graph& graph, const GcnConfig& config,
                  const TrainConfig& train_config, std::uint64_t seed) {
  train_config.validate();
  config.validate();
  if (dataset.split.train.empty() || dataset.split.val.empty() || dataset.split.test.empty()) {
    throw ContractViolation("train: split needs non-empty train, val and test sets");
  }
  if (dataset.n_nodes() != graph.edges.n_nodes()) {
    throw ContractViolation("train: graph and dataset node counts differ");
  }
  Trainer trainer(dataset, graph, config, train_config, seed);
  return trainer.run(seed);
}

std::pair<double, double> mean_and_std(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

std::size_t worker_threads(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("GDC_THREADS")) {
      const std::string s(env);
      std::size_t parsed = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), parsed);
      if (ec == std::errc() && ptr == s.data() + s.size()) n = parsed;
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(jobs, 1));
}

SeedSummary run_seeds(const Dataset& dataset, const Graph& graph, const GcnConfig& config,
                      const TrainConfig& train_config) {
  train_config.validate();
  const std::size_t n = train_config.seeds.size();
  SeedSummary summary;
  summary.runs.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        summary.runs[i] = train(dataset, graph, config, train_config, train_config.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = worker_threads(train_config.threads, n);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<double> acc;
  for (const auto& r : summary.runs) acc.push_back(r.test_acc);
  std::tie(summary.mean_test_acc, summary.std_test_acc) = mean_and_std(acc);
  return summary;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_epoch_csv(std::ostream& os, const std::vector<EpochLog>& log, std::size_t n_layers) {
  os << "epoch,train_loss,nll,kl,val_acc,test_acc";
  for (std::size_t l = 0; l < n_layers; ++l) os << ",keep_" << l;
  os << ",wall_time\n";
  for (const auto& r : log) {
    os << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.nll) << ','
       << format_double(r.kl) << ',' << format_double(r.val_acc) << ','
       << format_double(r.test_acc);
    for (std::size_t l = 0; l < n_layers; ++l) {
      os << ',' << (l < r.keep.size() ? format_double(r.keep[l]) : std::string());
    }
    os << ',' << format_double(r.wall_time) << '\n';
  }
}

}  // namespace gdc
