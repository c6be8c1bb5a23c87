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

#include "gdc/variational.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "gdc/error.hpp"

namespace gdc {

namespace {

constexpr int kSeriesTerms = 10;

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ContractViolation(std::string(name) + " must be positive and finite, got " +
                            std::to_string(v));
  }
}

double log_beta_fn(double x, double y) {
  return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y);
}

}  // namespace

KumaraswamyParams KumaraswamyParams::from_ab(double a, double b) {
  check_positive(a, "Kumaraswamy a");
  check_positive(b, "Kumaraswamy b");
  return {Tensor::scalar(std::log(a)), Tensor::scalar(std::log(b))};
}

double KumaraswamyParams::a() const { return std::exp(log_a.item()); }
double KumaraswamyParams::b() const { return std::exp(log_b.item()); }

double BetaPrior::alpha() const { return c / static_cast<double>(layers); }

double BetaPrior::beta() const {
  if (layers <= 1) return 1.0;
  return c * static_cast<double>(layers - 1) / static_cast<double>(layers);
}

KumaSample kuma_sample_partials(double a, double b, double u) {
  check_positive(a, "kuma_sample a");
  check_positive(b, "kuma_sample b");
  u = std::clamp(u, kProbEps, 1.0 - kProbEps);
  const double log_u = std::log(u);
  const double v = std::exp(log_u / b);    // u^{1/b}
  const double w = -std::expm1(log_u / b); // 1 - u^{1/b}
  KumaSample s;
  s.pi = std::exp(std::log(w) / a);
  if (s.pi < kProbEps || s.pi > 1.0 - kProbEps || !std::isfinite(s.pi)) {
    s.pi = std::clamp(std::isfinite(s.pi) ? s.pi : 0.0, kProbEps, 1.0 - kProbEps);
    s.clamped = true;
    return s;
  }
  s.dpi_da = -s.pi * std::log(w) / (a * a);
  s.dpi_db = s.pi / (a * w) * v * log_u / (b * b);
  return s;
}

double kuma_sample(double a, double b, double u) { return kuma_sample_partials(a, b, u).pi; }

double kuma_pdf(double pi, double a, double b) {
  check_positive(a, "kuma_pdf a");
  check_positive(b, "kuma_pdf b");
  if (!(pi > 0.0 && pi < 1.0)) {
    throw ContractViolation("kuma_pdf: pi=" + std::to_string(pi) + " outside (0, 1)");
  }
  return a * b * std::pow(pi, a - 1.0) * std::pow(1.0 - std::pow(pi, a), b - 1.0);
}

double kuma_mean(double a, double b) {
  check_positive(a, "kuma_mean a");
  check_positive(b, "kuma_mean b");
  return b * std::exp(log_beta_fn(1.0 + 1.0 / a, b));
}

KlValue kl_kuma_beta_grad(double a, double b, double c, std::size_t layers, bool full_series) {
  check_positive(a, "kl a");
  check_positive(b, "kl b");
  check_positive(c, "kl c");
  if (layers == 0) throw ContractViolation("kl_kuma_beta: layer count must be >= 1");
  const BetaPrior prior{c, layers};
  const double alpha = prior.alpha();
  const double euler = std::numbers::egamma;
  const double psi_b = boost::math::digamma(b);
  const double inner = -euler - psi_b - 1.0 / b;

  KlValue kl;
  kl.value = (a - alpha) / a * inner + std::log(a * b / alpha) - (b - 1.0) / b;
  kl.d_a = alpha / (a * a) * inner + 1.0 / a;
  kl.d_b = (a - alpha) / a * (-boost::math::trigamma(b) + 1.0 / (b * b)) + 1.0 / b -
           1.0 / (b * b);

  if (full_series) {
    const double beta = prior.beta();
    kl.value += log_beta_fn(alpha, beta) - log_beta_fn(alpha, 1.0);
    double s = 0.0, ds_da = 0.0, ds_db = 0.0;
    for (int m = 1; m <= kSeriesTerms; ++m) {
      const double x = m / a;
      const double den = m + a * b;
      const double bf = std::exp(log_beta_fn(x, b));
      const double psi_xb = boost::math::digamma(x + b);
      const double term = b * bf / den;
      s += term;
      ds_da += term * (boost::math::digamma(x) - psi_xb) * (-m / (a * a)) - term * b / den;
      ds_db += bf / den + term * (psi_b - psi_xb) - term * a / den;
    }
    kl.value += (beta - 1.0) * s;
    kl.d_a += (beta - 1.0) * ds_da;
    kl.d_b += (beta - 1.0) * ds_db;
  }
  return kl;
}

double kl_kuma_beta(double a, double b, double c, std::size_t layers, bool full_series) {
  return kl_kuma_beta_grad(a, b, c, layers, full_series).value;
}

double weight_kl_term(const Tensor& m, double pi_keep, std::size_t n_edges,
                      WeightKlConvention convention) {
  if (!(pi_keep >= 0.0 && pi_keep <= 1.0)) {
    throw ContractViolation("weight_kl_term: pi_keep outside [0, 1]");
  }
  const double mass = convention == WeightKlConvention::kKeepMass ? pi_keep : 1.0 - pi_keep;
  return static_cast<double>(n_edges) * mass / 2.0 * frobenius_sq(m);
}

double warmup_factor(std::size_t epoch, const WarmupSchedule& schedule) {
  if (schedule.ramp_epochs == 0) throw ContractViolation("warmup: ramp_epochs must be >= 1");
  return std::min(1.0, static_cast<double>(epoch) / static_cast<double>(schedule.ramp_epochs));
}

Var record_kuma_sample(Tape& tape, Var log_a, Var log_b, double u, bool* clamped) {
  const double a = std::exp(tape.value(log_a).item());
  const double b = std::exp(tape.value(log_b).item());
  const KumaSample s = kuma_sample_partials(a, b, u);
  if (clamped != nullptr) *clamped = s.clamped;
  // Chain through a = exp(log_a): d/dlog_a = a d/da.
  const double d_loga = s.dpi_da * a;
  const double d_logb = s.dpi_db * b;
  return tape.record(
      Tensor::scalar(s.pi), {log_a, log_b},
      [log_a, log_b, d_loga, d_logb](const Tensor& g, Tape& t) {
        t.accumulate(log_a, Tensor::scalar(g.item() * d_loga));
        t.accumulate(log_b, Tensor::scalar(g.item() * d_logb));
      },
      "kuma_sample");
}

Var record_kl_kuma_beta(Tape& tape, Var log_a, Var log_b, double c, std::size_t layers,
                        bool full_series) {
  const double a = std::exp(tape.value(log_a).item());
  const double b = std::exp(tape.value(log_b).item());
  const KlValue kl = kl_kuma_beta_grad(a, b, c, layers, full_series);
  const double d_loga = kl.d_a * a;
  const double d_logb = kl.d_b * b;
  return tape.record(
      Tensor::scalar(kl.value), {log_a, log_b},
      [log_a, log_b, d_loga, d_logb](const Tensor& g, Tape& t) {
        t.accumulate(log_a, Tensor::scalar(g.item() * d_loga));
        t.accumulate(log_b, Tensor::scalar(g.item() * d_logb));
      },
      "kl_kuma_beta");
}

}  // namespace gdc
