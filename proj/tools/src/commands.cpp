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

#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

#include "gdc/dataset.hpp"
#include "gdc/metrics.hpp"
#include "gdc/model.hpp"
#include "gdc/trainer.hpp"
#include "run_config.hpp"

namespace gdc::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kUqStream = 4;

struct Run {
  RunConfig rc;
  Dataset data;
  Graph graph;
  GcnConfig model;
  fs::path out;
};

Run prepare(const Options& opt, std::ostream& log) {
  Run run;
  run.rc = load_run_config(opt.config);
  if (!opt.out.empty()) run.rc.output_dir = fs::absolute(opt.out).lexically_normal();
  if (opt.seed_override) run.rc.train.seeds = {*opt.seed_override};
  if (opt.samples) {
    if (*opt.samples == 0) throw ConfigError("--samples must be >= 1");
    run.rc.uq.samples = *opt.samples;
  }
  run.out = run.rc.output_dir;
  fs::create_directories(run.out);
  {
    std::ofstream os(run.out / "config_resolved.ini");
    write_resolved_config(run.rc, os);
  }
  LoadReport report;
  run.data = load_dataset(run.rc.dataset, &report);
  if (report.skipped_unknown > 0 || report.skipped_self > 0) {
    log << "dataset: skipped " << report.skipped_unknown << " cites with unknown ids and "
        << report.skipped_self << " self-citations\n";
  }
  run.graph = Graph::build(adjacency_of(run.data), run.rc.model.normalization);
  run.model = build_gcn_config(run.rc.model, run.data.n_features(), run.data.class_count);
  log << "dataset: " << run.data.n_nodes() << " nodes, " << run.data.edges.size() << " edges, "
      << run.data.n_features() << " features, " << run.data.class_count << " classes; split "
      << run.data.split.train.size() << '/' << run.data.split.val.size() << '/'
      << run.data.split.test.size() << '\n';
  return run;
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw MalformedInput("cannot write " + path.string());
  return os;
}

ModelParams load_matching_checkpoint(const Options& opt, const Run& run) {
  if (opt.checkpoint.empty()) throw ConfigError("--checkpoint is required for this command");
  if (!fs::is_regular_file(opt.checkpoint)) {
    throw ConfigError("checkpoint not found: " + opt.checkpoint.string());
  }
  ModelParams params = load_checkpoint(opt.checkpoint);
  try {
    check_params_match(params, run.model);
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return params;
}

void write_tv_csv(const fs::path& path, const std::vector<TvRecord>& tv) {
  auto os = open_csv(path);
  os << "epoch,layer,tv\n";
  for (const auto& r : tv) os << r.epoch << ',' << r.layer << ',' << format_double(r.tv) << '\n';
}

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

void report_summary(std::ostream& log, const SeedSummary& s) {
  log << "test accuracy: " << percent(s.mean_test_acc) << " +- " << percent(s.std_test_acc)
      << " % over " << s.runs.size() << " seed(s)\n";
}

}  // namespace

int cmd_train(const Options& opt, std::ostream& log) {
  const Run run = prepare(opt, log);
  const SeedSummary s = run_seeds(run.data, run.graph, run.model, run.rc.train);
  auto summary = open_csv(run.out / "summary.csv");
  summary << "seed,best_val_acc,test_acc\n";
  for (const auto& r : s.runs) {
    summary << r.seed << ',' << format_double(r.best_val_acc) << ',' << format_double(r.test_acc)
            << '\n';
    const std::string tag = "seed" + std::to_string(r.seed);
    auto epochs = open_csv(run.out / ("epochs_" + tag + ".csv"));
    write_epoch_csv(epochs, r.log, run.model.n_layers());
    save_checkpoint(r.params, run.out / ("checkpoint_" + tag + ".bin"));
    if (run.rc.train.track_tv) write_tv_csv(run.out / ("tv_" + tag + ".csv"), r.tv);
    log << "seed " << r.seed << ": best epoch " << r.best_epoch << ", val "
        << percent(r.best_val_acc) << " %, test " << percent(r.test_acc) << " %\n";
  }
  report_summary(log, s);
  return kExitOk;
}

int cmd_eval(const Options& opt, std::ostream& log) {
  const Run run = prepare(opt, log);
  const ModelParams params = load_matching_checkpoint(opt, run);
  const EvalResult ev = evaluate(run.data, run.graph, run.model, params);
  auto os = open_csv(run.out / "eval.csv");
  os << "val_acc,test_acc\n" << format_double(ev.val_acc) << ',' << format_double(ev.test_acc)
     << '\n';
  log << "val " << percent(ev.val_acc) << " %, test " << percent(ev.test_acc) << " %\n";
  return kExitOk;
}

int cmd_uq(const Options& opt, std::ostream& log) {
  const Run run = prepare(opt, log);
  const ModelParams params = load_matching_checkpoint(opt, run);
  Rng rng = Rng::derive(run.rc.train.seeds.front(), {kUqStream});
  const McPrediction mc =
      predict_mc(params, run.data.features, run.graph, run.model, run.rc.uq.samples, rng);
  const auto preds = argmax_rows(mc.mean);
  const auto entropy_all = predictive_entropy(mc.mean);
  const auto& test = run.data.split.test;
  std::vector<bool> correct;
  std::vector<double> entropy;
  for (std::size_t i : test) {
    correct.push_back(preds[i] == run.data.labels[i]);
    entropy.push_back(entropy_all[i]);
  }
  const double max_h = run.rc.uq.max_entropy_log_classes
                           ? std::log(static_cast<double>(run.data.class_count))
                           : 0.0;
  const auto rows = pavpu(correct, entropy, run.rc.uq.fracs, max_h);
  auto ps = open_csv(run.out / "pavpu.csv");
  ps << "threshold_frac,pavpu,p_acc_given_cert,p_cert_given_inacc\n";
  for (const auto& r : rows) {
    ps << format_double(r.frac) << ',' << format_double(r.pavpu) << ','
       << format_double(r.p_acc_given_cert) << ',' << format_double(r.p_cert_given_inacc) << '\n';
  }
  auto es = open_csv(run.out / "entropy.csv");
  es << "node,entropy,correct\n";
  for (std::size_t k = 0; k < test.size(); ++k) {
    es << test[k] << ',' << format_double(entropy[k]) << ',' << (correct[k] ? 1 : 0) << '\n';
  }
  log << "MC test accuracy (" << run.rc.uq.samples << " samples): "
      << percent(accuracy(preds, run.data.labels, test)) << " %\n";
  for (const auto& r : rows) {
    log << "  frac " << format_double(r.frac) << ": PAvPU " << format_double(r.pavpu) << '\n';
  }
  return kExitOk;
}

int cmd_diagnose(const Options& opt, std::ostream& log) {
  Run run = prepare(opt, log);
  if (!opt.checkpoint.empty()) {
    // Single-shot TV of the checkpoint's deterministic pass; epoch column is 0.
    const ModelParams params = load_matching_checkpoint(opt, run);
    Tape tape;
    ForwardOptions fo;
    fo.mode = MaskMode::kExpected;
    fo.capture_hidden = true;
    const ForwardPass pass = forward(tape, params, run.data.features, run.graph, run.model,
                                     ForwardNoise(run.model.n_layers()), fo);
    const double lam = lambda_max(run.graph.adjacency).value;
    std::vector<TvRecord> tv;
    for (std::size_t h = 0; h < pass.hidden.size(); ++h) {
      tv.push_back({0, h,
                    lam > 0.0 ? total_variation(tape.value(pass.hidden[h]), run.graph.adjacency,
                                                lam, true)
                              : 0.0});
    }
    write_tv_csv(run.out / "tv.csv", tv);
  } else {
    TrainConfig tc = run.rc.train;
    tc.track_tv = true;
    const TrainResult r = train(run.data, run.graph, run.model, tc, tc.seeds.front());
    write_tv_csv(run.out / "tv.csv", r.tv);
    log << "tracked TV over " << r.log.size() << " epochs\n";
  }
  if (!run.rc.depths.empty()) {
    auto ds = open_csv(run.out / "depth_sweep.csv");
    ds << "layers,mean_test_acc,std_test_acc\n";
    for (std::size_t depth : run.rc.depths) {
      const GcnConfig cfg = build_gcn_config(run.rc.model, run.data.n_features(),
                                             run.data.class_count, depth);
      const SeedSummary s = run_seeds(run.data, run.graph, cfg, run.rc.train);
      ds << depth << ',' << format_double(s.mean_test_acc) << ','
         << format_double(s.std_test_acc) << '\n';
      log << depth << " layers: ";
      report_summary(log, s);
    }
  }
  return kExitOk;
}

int cmd_sweep_blocks(const Options& opt, std::ostream& log) {
  const Run run = prepare(opt, log);
  auto os = open_csv(run.out / "sweep_blocks.csv");
  os << "n_blocks,mean_test_acc,std_test_acc\n";
  for (std::size_t nb : run.rc.sweep_blocks) {
    const GcnConfig cfg = build_gcn_config(run.rc.model, run.data.n_features(),
                                           run.data.class_count, std::nullopt, nb);
    const SeedSummary s = run_seeds(run.data, run.graph, cfg, run.rc.train);
    os << nb << ',' << format_double(s.mean_test_acc) << ',' << format_double(s.std_test_acc)
       << '\n';
    os.flush();
    log << nb << " block(s): ";
    report_summary(log, s);
  }
  return kExitOk;
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace gdc::cli
