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
#include <functional>
#include <iosfwd>
#include <optional>

namespace gdc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;

struct Options {
  std::filesystem::path config;
  std::filesystem::path checkpoint;
  std::filesystem::path out;  // overrides [output] dir when set
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed_override;
};

int cmd_train(const Options& opt, std::ostream& log);
int cmd_eval(const Options& opt, std::ostream& log);
int cmd_uq(const Options& opt, std::ostream& log);
int cmd_diagnose(const Options& opt, std::ostream& log);
int cmd_sweep_blocks(const Options& opt, std::ostream& log);

/// Runs a command and maps library exceptions to exit codes: configuration
/// and input errors 2, divergence 3. Messages go to err.
int run_guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace gdc::cli
