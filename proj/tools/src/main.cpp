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

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace gdc::cli;
  CLI::App app{"Graph DropConnect GCN training and diagnostics"};
  app.require_subcommand(1);

  Options opt;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool needs_checkpoint) {
    sub->add_option("--config", opt.config, "INI run configuration")->required();
    auto* ck = sub->add_option("--checkpoint", opt.checkpoint, "parameter checkpoint");
    if (needs_checkpoint) ck->required();
    sub->add_option("--out", opt.out, "output directory (overrides [output] dir)");
    sub->add_option("--seed-override", seed, "train with this single seed");
  };
  auto* train = app.add_subcommand("train", "train every configured seed");
  add_common(train, false);
  auto* eval = app.add_subcommand("eval", "accuracy of a checkpoint");
  add_common(eval, true);
  auto* uq = app.add_subcommand("uq", "Monte Carlo uncertainty and PAvPU of a checkpoint");
  add_common(uq, true);
  uq->add_option("--samples", samples, "Monte Carlo samples");
  auto* diagnose = app.add_subcommand("diagnose", "total variation tracking and depth sweep");
  add_common(diagnose, false);
  auto* sweep = app.add_subcommand("sweep-blocks", "accuracy for each configured block count");
  add_common(sweep, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed-override") > 0) opt.seed_override = seed;
    if (sub == uq && uq->count("--samples") > 0) opt.samples = samples;
  }

  std::function<int()> command;
  if (*train) command = [&] { return cmd_train(opt, std::cout); };
  if (*eval) command = [&] { return cmd_eval(opt, std::cout); };
  if (*uq) command = [&] { return cmd_uq(opt, std::cout); };
  if (*diagnose) command = [&] { return cmd_diagnose(opt, std::cout); };
  if (*sweep) command = [&] { return cmd_sweep_blocks(opt, std::cout); };
  return run_guarded(command, std::cerr);
}
