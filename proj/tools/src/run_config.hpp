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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gdc/dataset.hpp"
#include "gdc/error.hpp"
#include "gdc/masks.hpp"
#include "gdc/model.hpp"
#include "gdc/trainer.hpp"

namespace gdc::cli {

// Bad or inconsistent configuration; maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct DatasetSection {
  std::string kind = "content_cites";  // content_cites | synthetic_two_cluster | synthetic_sbm
  std::filesystem::path content;
  std::filesystem::path cites;
  std::filesystem::path cache;  // optional binary cache of the parsed files
  bool row_normalize = true;
  std::size_t per_class_train = 20;
  std::size_t n_val = 500;
  std::size_t n_test = 1000;
  std::size_t n_nodes = 600;  // synthetic kinds
  SbmOptions sbm;
  std::uint64_t generator_seed = 0;
};

struct ModelSection {
  std::size_t layers = 2;
  std::size_t hidden = 128;
  MaskKind regularizer = MaskKind::kGdc;
  bool learned = true;
  std::size_t n_blocks = 1;
  double keep_prob = 0.5;
  double feature_keep_prob = 1.0;
  bool symmetric = false;
  Estimator estimator = Estimator::kConcrete;
  double temperature = 0.67;
  ConcreteForm concrete_form = ConcreteForm::kLogitOverT;
  Normalization normalization = Normalization::kIdentityPlusSym;
  bool protect_self_loops = false;
  bool renormalize_after_mask = false;
  bool use_bias = false;
  bool kl_full_series = false;
  bool kl_weight_scaling = false;
  double beta_prior_c = 2.0;
  double kuma_init_b = 3.0;
};

struct UqSection {
  std::size_t samples = 20;
  std::vector<double> fracs{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  bool max_entropy_log_classes = false;  // threshold relative to ln C instead of the observed max
};

struct RunConfig {
  std::filesystem::path source;
  DatasetSection dataset;
  ModelSection model;
  TrainConfig train;
  std::filesystem::path output_dir = "out";
  UqSection uq;
  std::vector<std::size_t> depths;  // diagnose depth sweep
  std::vector<std::size_t> sweep_blocks{1, 2, 4};
};

/// Parses an INI file. Relative paths resolve against the file's directory;
/// unknown sections or keys, bad values and missing referenced files throw
/// ConfigError. Comments must start a line (`#` or `;`).
RunConfig load_run_config(const std::filesystem::path& path);

/// Every setting, defaults included, in the same INI format. Paths are
/// written absolute so the file can be re-run from anywhere.
void write_resolved_config(const RunConfig& config, std::ostream& os);

/// Model config for the given input width and class count. depth and
/// n_blocks override the model section when set.
GcnConfig build_gcn_config(const ModelSection& model, std::size_t in_features,
                           std::size_t classes, std::optional<std::size_t> depth = {},
                           std::optional<std::size_t> n_blocks = {});

/// Loads or generates the dataset, row-normalizes features if requested and
/// attaches the split.
Dataset load_dataset(const DatasetSection& section, LoadReport* report = nullptr);

}  // namespace gdc::cli
