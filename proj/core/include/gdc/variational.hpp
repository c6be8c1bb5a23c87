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

// Beta-Bernoulli hierarchy over per-layer keep probabilities: Kumaraswamy
// variational posterior, its KL divergence to the beta prior, and the KL
// warm-up schedule.

#include <cstddef>

#include "gdc/tape.hpp"
#include "gdc/tensor.hpp"

namespace gdc {

inline constexpr double kProbEps = 1e-10;

/// Kumaraswamy(a, b) posterior, stored as unconstrained log values so that
/// a, b > 0 always.
struct KumaraswamyParams {
  Tensor log_a = Tensor::scalar(0.0);
  Tensor log_b = Tensor::scalar(0.0);

  static KumaraswamyParams from_ab(double a, double b);
  double a() const;
  double b() const;
};

/// Beta(c/L, c(L-1)/L) prior on each layer's keep probability. For a single
/// layer the second shape is taken as 1.
struct BetaPrior {
  double c = 2.0;
  std::size_t layers = 2;

  double alpha() const;
  double beta() const;
};

struct WarmupSchedule {
  std::size_t ramp_epochs = 20;
};

/// (1 - u^{1/b})^{1/a}. u is clamped to [eps, 1-eps].
double kuma_sample(double a, double b, double u);

struct KumaSample {
  double pi = 0.0;
  double dpi_da = 0.0;
  double dpi_db = 0.0;
  bool clamped = false;  // pi hit the [eps, 1-eps] guard; partials are 0
};

/// kuma_sample together with its exact partial derivatives in a and b.
KumaSample kuma_sample_partials(double a, double b, double u);

/// a b pi^{a-1} (1 - pi^a)^{b-1}. Throws ContractViolation for pi outside (0,1).
double kuma_pdf(double pi, double a, double b);

/// E[pi] = b * B(1 + 1/a, b).
double kuma_mean(double a, double b);

struct KlValue {
  double value = 0.0;
  double d_a = 0.0;
  double d_b = 0.0;
};

/// KL(Kumaraswamy(a,b) || prior) in the closed form
///   (a - c/L)/a * (-gamma - digamma(b) - 1/b) + log(a b / (c/L)) - (b-1)/b,
/// which is exact for a Beta(c/L, 1) prior. With full_series the Beta(c/L,
/// c(L-1)/L) correction is added: the log-beta normaliser difference and the
/// (beta-1) b sum_{m=1}^{10} B(m/a, b) / (m + a b) series.
double kl_kuma_beta(double a, double b, double c, std::size_t layers, bool full_series = false);

/// Same value together with d/da and d/db.
KlValue kl_kuma_beta_grad(double a, double b, double c, std::size_t layers,
                          bool full_series = false);

enum class WeightKlConvention {
  kKeepMass,      // |E| * pi_keep / 2 * ||M||^2: mass of the nonzero weight value
  kDropRate,     // |E| * (1 - pi_keep) / 2 * ||M||^2
};

double weight_kl_term(const Tensor& m, double pi_keep, std::size_t n_edges,
                      WeightKlConvention convention = WeightKlConvention::kKeepMass);

/// min(1, epoch / ramp_epochs).
double warmup_factor(std::size_t epoch, const WarmupSchedule& schedule);

/// Records pi = kuma_sample(exp(log_a), exp(log_b), u) with gradients to the
/// log parameters (both 1x1). clamped, if given, reports the guard.
Var record_kuma_sample(Tape& tape, Var log_a, Var log_b, double u, bool* clamped = nullptr);

/// Records kl_kuma_beta as a 1x1 value of the log parameters.
Var record_kl_kuma_beta(Tape& tape, Var log_a, Var log_b, double c, std::size_t layers,
                        bool full_series = false);

}  // namespace gdc
