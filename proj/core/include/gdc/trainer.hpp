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
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gdc/dataset.hpp"
#include "gdc/model.hpp"
#include "gdc/tensor.hpp"
#include "gdc/variational.hpp"

namespace gdc {

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
};

/// One Adam update (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected). A
/// gradient set with any non-finite entry is rejected: nothing changes and
/// the call returns false.
bool adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               double lr);

struct TrainConfig {
  std::size_t epochs = 2000;
  double lr = 0.005;
  double l2_factor = 0.0;
  WarmupSchedule warmup;
  std::size_t patience = 200;
  std::vector<std::uint64_t> seeds{0};
  std::size_t threads = 0;       // 0: GDC_THREADS or the hardware count
  bool track_tv = false;         // normalized TV of every hidden layer per epoch
  std::size_t divergence_epochs = 5;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double nll = 0.0;
  double kl = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::vector<double> keep;  // expected keep probability per layer
  double wall_time = 0.0;    // seconds since the run started
};

struct TvRecord {
  std::size_t epoch = 0;
  std::size_t layer = 0;
  double tv = 0.0;
};

struct TrainResult {
  std::uint64_t seed = 0;
  ModelParams params;  // parameters at the best validation epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  double test_acc = 0.0;  // of the returned parameters
  std::vector<TvRecord> tv;
};

/// Full-batch training on dataset.split with early stopping on the accuracy
/// of the deterministic (expected-keep) pass. The features are used as given.
/// Throws DivergenceError after divergence_epochs consecutive epochs whose
/// loss or gradients are not finite.
TrainResult train(const Dataset& dataset, const Graph& graph, const GcnConfig& config,
                  const TrainConfig& train_config, std::uint64_t seed);

/// Test accuracy and validation accuracy of the deterministic pass.
struct EvalResult {
  double val_acc = 0.0;
  double test_acc = 0.0;
};
EvalResult evaluate(const Dataset& dataset, const Graph& graph, const GcnConfig& config,
                    const ModelParams& params);

struct SeedSummary {
  std::vector<TrainResult> runs;  // in seed order
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;  // sample standard deviation, 0 for one seed
};

/// Trains every seed in train_config.seeds, in parallel across worker threads.
SeedSummary run_seeds(const Dataset& dataset, const Graph& graph, const GcnConfig& config,
                      const TrainConfig& train_config);

/// Mean and sample (n-1) standard deviation.
std::pair<double, double> mean_and_std(std::span<const double> xs);

/// Worker count: requested if positive, else GDC_THREADS if set, else the
/// hardware count; never more than jobs and never less than 1.
std::size_t worker_threads(std::size_t requested, std::size_t jobs);

/// CSV with header epoch,train_loss,nll,kl,val_acc,test_acc,keep_0..,wall_time.
void write_epoch_csv(std::ostream& os, const std::vector<EpochLog>& log, std::size_t n_layers);

/// Shortest round-trip decimal form of v.
std::string format_double(double v);

}  // namespace gdc
