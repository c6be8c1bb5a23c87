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

#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace gdc::cli {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(key + ": cannot parse '" + s + "' as a number");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

// Reads the keys of one section and remembers which were consumed.
class Section {
 public:
  Section(const pt::ptree& root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_)) node_ = &*child;
  }

  template <typename Fn>
  void read(const std::string& key, Fn&& apply) {
    known_.insert(key);
    if (node_ == nullptr) return;
    if (auto v = node_->get_optional<std::string>(key)) {
      const std::string full = name_ + "." + key;
      try {
        apply(full, trim(*v));
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(full + ": " + e.what());
      }
    }
  }

  void size(const std::string& key, std::size_t& out) {
    read(key, [&](const std::string& k, const std::string& v) { out = parse_number<std::size_t>(k, v); });
  }
  void u64(const std::string& key, std::uint64_t& out) {
    read(key, [&](const std::string& k, const std::string& v) { out = parse_number<std::uint64_t>(k, v); });
  }
  void real(const std::string& key, double& out) {
    read(key, [&](const std::string& k, const std::string& v) { out = parse_number<double>(k, v); });
  }
  void flag(const std::string& key, bool& out) {
    read(key, [&](const std::string& k, const std::string& v) { out = parse_bool(k, v); });
  }
  void text(const std::string& key, std::string& out) {
    read(key, [&](const std::string&, const std::string& v) { out = v; });
  }
  void path(const std::string& key, fs::path& out, const fs::path& base) {
    read(key, [&](const std::string&, const std::string& v) {
      out = v.empty() ? fs::path() : (base / v).lexically_normal();
    });
  }

  void reject_unknown() const {
    if (node_ == nullptr) return;
    for (const auto& [key, child] : *node_) {
      if (!child.empty()) throw ConfigError("[" + name_ + "] nested key '" + key + "'");
      if (!known_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
    }
  }

 private:
  std::string name_;
  const pt::ptree* node_ = nullptr;
  std::set<std::string> known_;
};

const std::map<std::string, Normalization>& normalization_names() {
  static const std::map<std::string, Normalization> m{
      {"identity_plus_sym", Normalization::kIdentityPlusSym},
      {"renorm_trick", Normalization::kRenormTrick}};
  return m;
}

const std::map<std::string, ConcreteForm>& concrete_names() {
  static const std::map<std::string, ConcreteForm> m{{"logit_over_t", ConcreteForm::kLogitOverT},
                                                     {"standard", ConcreteForm::kStandard}};
  return m;
}

template <typename E>
E lookup(const std::map<std::string, E>& names, const std::string& key, const std::string& v) {
  const auto it = names.find(v);
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [n, _] : names) allowed += (allowed.empty() ? "" : ", ") + n;
    throw ConfigError(key + ": '" + v + "' is not one of " + allowed);
  }
  return it->second;
}

template <typename E>
std::string name_of(const std::map<std::string, E>& names, E e) {
  for (const auto& [n, v] : names) {
    if (v == e) return n;
  }
  return {};
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(x);
    } else {
      out += std::to_string(x);
    }
  }
  return out;
}

std::string b2s(bool b) { return b ? "true" : "false"; }

void require_file(const fs::path& p, const std::string& key) {
  if (p.empty()) throw ConfigError(key + " is required");
  if (!fs::is_regular_file(p)) throw ConfigError(key + ": file not found: " + p.string());
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  pt::ptree root;
  try {
    pt::read_ini(path.string(), root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  RunConfig rc;
  rc.source = fs::absolute(path).lexically_normal();
  const fs::path base = rc.source.parent_path();
  rc.output_dir = base / "out";

  static const std::set<std::string> sections{"dataset", "model", "train", "output",
                                              "uq",      "diagnose", "sweep"};
  for (const auto& [name, child] : root) {
    if (!sections.count(name)) {
      throw ConfigError(child.empty() ? "key '" + name + "' outside any section"
                                      : "unknown section [" + name + "]");
    }
  }

  Section ds(root, "dataset");
  DatasetSection& d = rc.dataset;
  ds.text("kind", d.kind);
  ds.path("content", d.content, base);
  ds.path("cites", d.cites, base);
  ds.path("cache", d.cache, base);
  ds.flag("row_normalize", d.row_normalize);
  ds.size("per_class_train", d.per_class_train);
  ds.size("n_val", d.n_val);
  ds.size("n_test", d.n_test);
  ds.size("n_nodes", d.n_nodes);
  ds.size("n_classes", d.sbm.n_classes);
  ds.size("n_features", d.sbm.n_features);
  ds.real("p_in", d.sbm.p_in);
  ds.real("p_out", d.sbm.p_out);
  ds.size("words_per_node", d.sbm.words_per_node);
  ds.real("word_noise", d.sbm.word_noise);
  ds.u64("generator_seed", d.generator_seed);
  ds.reject_unknown();
  d.sbm.n_nodes = d.n_nodes;
  if (d.kind == "content_cites") {
    if (d.cache.empty() || !fs::is_regular_file(d.cache)) {
      require_file(d.content, "dataset.content");
      require_file(d.cites, "dataset.cites");
    }
  } else if (d.kind != "synthetic_two_cluster" && d.kind != "synthetic_sbm") {
    throw ConfigError("dataset.kind: '" + d.kind +
                      "' is not one of content_cites, synthetic_two_cluster, synthetic_sbm");
  }

  Section ms(root, "model");
  ModelSection& m = rc.model;
  ms.size("layers", m.layers);
  ms.size("hidden", m.hidden);
  ms.read("regularizer", [&](const std::string&, const std::string& v) {
    m.regularizer = parse_mask_kind(v);
  });
  ms.flag("learned", m.learned);
  ms.size("n_blocks", m.n_blocks);
  ms.real("keep_prob", m.keep_prob);
  ms.real("feature_keep_prob", m.feature_keep_prob);
  ms.flag("symmetric", m.symmetric);
  ms.read("estimator", [&](const std::string&, const std::string& v) {
    m.estimator = parse_estimator(v);
  });
  ms.real("temperature", m.temperature);
  ms.read("concrete_form", [&](const std::string& k, const std::string& v) {
    m.concrete_form = lookup(concrete_names(), k, v);
  });
  ms.read("normalization", [&](const std::string& k, const std::string& v) {
    m.normalization = lookup(normalization_names(), k, v);
  });
  ms.flag("protect_self_loops", m.protect_self_loops);
  ms.flag("renormalize_after_mask", m.renormalize_after_mask);
  ms.flag("use_bias", m.use_bias);
  ms.flag("kl_full_series", m.kl_full_series);
  ms.flag("kl_weight_scaling", m.kl_weight_scaling);
  ms.real("beta_prior_c", m.beta_prior_c);
  ms.real("kuma_init_b", m.kuma_init_b);
  ms.reject_unknown();
  if (m.layers == 0) throw ConfigError("model.layers must be >= 1");
  if (m.hidden == 0) throw ConfigError("model.hidden must be >= 1");

  Section ts(root, "train");
  TrainConfig& t = rc.train;
  t.l2_factor = 5e-3;
  t.seeds = {0, 1, 2, 3, 4};
  ts.size("epochs", t.epochs);
  ts.real("lr", t.lr);
  ts.real("l2_factor", t.l2_factor);
  ts.size("warmup_epochs", t.warmup.ramp_epochs);
  ts.size("patience", t.patience);
  ts.read("seeds", [&](const std::string& k, const std::string& v) {
    t.seeds = parse_list<std::uint64_t>(k, v);
  });
  ts.size("threads", t.threads);
  ts.flag("track_tv", t.track_tv);
  ts.reject_unknown();
  try {
    t.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("[train] ") + e.what());
  }

  Section os(root, "output");
  os.path("dir", rc.output_dir, base);
  os.reject_unknown();

  Section us(root, "uq");
  us.size("samples", rc.uq.samples);
  us.read("fracs", [&](const std::string& k, const std::string& v) {
    rc.uq.fracs = parse_list<double>(k, v);
  });
  us.flag("max_entropy_log_classes", rc.uq.max_entropy_log_classes);
  us.reject_unknown();
  if (rc.uq.samples == 0) throw ConfigError("uq.samples must be >= 1");
  for (double f : rc.uq.fracs) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("uq.fracs must lie in [0, 1]");
  }

  Section gs(root, "diagnose");
  gs.read("depths", [&](const std::string& k, const std::string& v) {
    rc.depths = parse_list<std::size_t>(k, v);
  });
  gs.reject_unknown();

  Section ss(root, "sweep");
  ss.read("blocks", [&](const std::string& k, const std::string& v) {
    rc.sweep_blocks = parse_list<std::size_t>(k, v);
  });
  ss.reject_unknown();
  for (std::size_t v : rc.depths) {
    if (v == 0) throw ConfigError("diagnose.depths entries must be >= 1");
  }
  for (std::size_t v : rc.sweep_blocks) {
    if (v == 0) throw ConfigError("sweep.blocks entries must be >= 1");
  }
  return rc;
}

void write_resolved_config(const RunConfig& rc, std::ostream& os) {
  const DatasetSection& d = rc.dataset;
  os << "[dataset]\n"
     << "kind = " << d.kind << '\n'
     << "content = " << d.content.string() << '\n'
     << "cites = " << d.cites.string() << '\n'
     << "cache = " << d.cache.string() << '\n'
     << "row_normalize = " << b2s(d.row_normalize) << '\n'
     << "per_class_train = " << d.per_class_train << '\n'
     << "n_val = " << d.n_val << '\n'
     << "n_test = " << d.n_test << '\n'
     << "n_nodes = " << d.n_nodes << '\n'
     << "n_classes = " << d.sbm.n_classes << '\n'
     << "n_features = " << d.sbm.n_features << '\n'
     << "p_in = " << format_double(d.sbm.p_in) << '\n'
     << "p_out = " << format_double(d.sbm.p_out) << '\n'
     << "words_per_node = " << d.sbm.words_per_node << '\n'
     << "word_noise = " << format_double(d.sbm.word_noise) << '\n'
     << "generator_seed = " << d.generator_seed << "\n\n";
  const ModelSection& m = rc.model;
  os << "[model]\n"
     << "layers = " << m.layers << '\n'
     << "hidden = " << m.hidden << '\n'
     << "regularizer = " << to_string(m.regularizer) << '\n'
     << "learned = " << b2s(m.learned) << '\n'
     << "n_blocks = " << m.n_blocks << '\n'
     << "keep_prob = " << format_double(m.keep_prob) << '\n'
     << "feature_keep_prob = " << format_double(m.feature_keep_prob) << '\n'
     << "symmetric = " << b2s(m.symmetric) << '\n'
     << "estimator = " << to_string(m.estimator) << '\n'
     << "temperature = " << format_double(m.temperature) << '\n'
     << "concrete_form = " << name_of(concrete_names(), m.concrete_form) << '\n'
     << "normalization = " << name_of(normalization_names(), m.normalization) << '\n'
     << "protect_self_loops = " << b2s(m.protect_self_loops) << '\n'
     << "renormalize_after_mask = " << b2s(m.renormalize_after_mask) << '\n'
     << "use_bias = " << b2s(m.use_bias) << '\n'
     << "kl_full_series = " << b2s(m.kl_full_series) << '\n'
     << "kl_weight_scaling = " << b2s(m.kl_weight_scaling) << '\n'
     << "beta_prior_c = " << format_double(m.beta_prior_c) << '\n'
     << "kuma_init_b = " << format_double(m.kuma_init_b) << "\n\n";
  const TrainConfig& t = rc.train;
  os << "[train]\n"
     << "epochs = " << t.epochs << '\n'
     << "lr = " << format_double(t.lr) << '\n'
     << "l2_factor = " << format_double(t.l2_factor) << '\n'
     << "warmup_epochs = " << t.warmup.ramp_epochs << '\n'
     << "patience = " << t.patience << '\n'
     << "seeds = " << join(t.seeds) << '\n'
     << "threads = " << t.threads << '\n'
     << "track_tv = " << b2s(t.track_tv) << "\n\n";
  os << "[output]\n"
     << "dir = " << rc.output_dir.string() << "\n\n";
  os << "[uq]\n"
     << "samples = " << rc.uq.samples << '\n'
     << "fracs = " << join(rc.uq.fracs) << '\n'
     << "max_entropy_log_classes = " << b2s(rc.uq.max_entropy_log_classes) << "\n\n";
  if (!rc.depths.empty()) os << "[diagnose]\ndepths = " << join(rc.depths) << "\n\n";
  os << "[sweep]\nblocks = " << join(rc.sweep_blocks) << '\n';
}

GcnConfig build_gcn_config(const ModelSection& m, std::size_t in_features, std::size_t classes,
                           std::optional<std::size_t> depth, std::optional<std::size_t> n_blocks) {
  const std::size_t layers = depth.value_or(m.layers);
  GcnConfig c;
  c.layer_dims.push_back(in_features);
  for (std::size_t l = 1; l < layers; ++l) c.layer_dims.push_back(m.hidden);
  c.layer_dims.push_back(classes);
  MaskSpec spec;
  spec.kind = m.regularizer;
  spec.learned = m.learned;
  spec.n_blocks = n_blocks.value_or(m.n_blocks);
  spec.symmetric = m.symmetric;
  spec.relaxed = m.estimator == Estimator::kConcrete;
  spec.temperature = m.temperature;
  spec.keep_prob = m.keep_prob;
  spec.feature_keep_prob = m.feature_keep_prob;
  c.layers.assign(layers, spec);
  c.estimator = m.learned ? m.estimator : Estimator::kNone;
  c.normalization = m.normalization;
  c.concrete_form = m.concrete_form;
  c.protect_self_loops = m.protect_self_loops;
  c.renormalize_after_mask = m.renormalize_after_mask;
  c.use_bias = m.use_bias;
  c.kl_full_series = m.kl_full_series;
  c.kl_weight_scaling = m.kl_weight_scaling;
  c.beta_prior_c = m.beta_prior_c;
  c.kuma_init_b = m.kuma_init_b;
  try {
    c.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("[model] ") + e.what());
  }
  return c;
}

Dataset load_dataset(const DatasetSection& d, LoadReport* report) {
  Dataset ds;
  if (d.kind == "content_cites") {
    if (!d.cache.empty() && fs::is_regular_file(d.cache)) {
      ds = load_dataset_cache(d.cache);
    } else {
      ds = load_content_cites(d.content, d.cites, report);
      if (!d.cache.empty()) save_dataset_cache(ds, d.cache);
    }
  } else if (d.kind == "synthetic_two_cluster") {
    ds = make_two_cluster(d.n_nodes);
  } else {
    Rng rng(d.generator_seed);
    ds = make_sbm(d.sbm, rng);
  }
  if (d.row_normalize) ds.features = row_normalize(ds.features);
  try {
    ds.split = make_split(ds, d.per_class_train, d.n_val, d.n_test);
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("[dataset] split: ") + e.what());
  }
  return ds;
}

}  // namespace gdc::cli
