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

#include "gdc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <string_view>
#include <unordered_map>

#include "binary_io.hpp"
#include "gdc/error.hpp"

namespace gdc {

namespace {

constexpr std::uint32_t kCacheVersion = 1;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MalformedInput("cannot open " + p.string());
  return in;
}

}  // namespace

void Dataset::validate() const {
  const std::size_t n = labels.size();
  if (features.rows() != n) throw MalformedInput("Dataset: feature rows != label count");
  for (auto y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw MalformedInput("Dataset: label outside [0, class_count)");
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [u, v] = edges[i];
    if (u >= n || v >= n) throw MalformedInput("Dataset: edge endpoint out of range");
    if (u == v) throw MalformedInput("Dataset: self-loop edge");
    if (u > v) throw MalformedInput("Dataset: edges must be stored with u < v");
    if (i > 0 && !(edges[i - 1] < edges[i])) {
      throw MalformedInput("Dataset: edges not sorted or duplicated");
    }
  }
  std::vector<char> seen(n, 0);
  for (const auto* set : {&split.train, &split.val, &split.test}) {
    for (std::size_t i = 0; i < set->size(); ++i) {
      const std::size_t v = (*set)[i];
      if (v >= n) throw MalformedInput("Dataset: split index out of range");
      if (i > 0 && (*set)[i - 1] >= v) throw MalformedInput("Dataset: split not increasing");
      if (seen[v]) throw MalformedInput("Dataset: split sets overlap");
      seen[v] = 1;
    }
  }
}

Dataset load_content_cites(const std::filesystem::path& content_path,
                           const std::filesystem::path& cites_path, LoadReport* report) {
  Dataset ds;
  std::unordered_map<std::string, std::size_t> index_of;
  std::map<std::string, std::int32_t, std::less<>> label_index;
  std::vector<double> feature_data;
  std::size_t n_features = 0;
  bool have_width = false;

  {
    std::ifstream in = open_or_throw(content_path);
    const std::string src = content_path.string();
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string_view line = strip_cr(raw);
      if (is_blank(line)) continue;
      const auto fields = split_tabs(line);
      if (fields.size() < 3) {
        throw ParseError(src, line_no, "expected id, features and label separated by TAB");
      }
      const std::size_t width = fields.size() - 2;
      if (!have_width) {
        n_features = width;
        have_width = true;
      } else if (width != n_features) {
        throw ParseError(src, line_no,
                         "expected " + std::to_string(n_features) + " features, got " +
                             std::to_string(width));
      }
      std::string id(fields.front());
      if (id.empty()) throw ParseError(src, line_no, "empty node id");
      if (!index_of.emplace(id, ds.node_ids.size()).second) {
        throw ParseError(src, line_no, "duplicate node id '" + id + "'");
      }
      for (std::size_t j = 1; j + 1 < fields.size(); ++j) {
        double v = 0.0;
        const auto f = fields[j];
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || ptr != f.data() + f.size()) {
          throw ParseError(src, line_no, "bad feature value '" + std::string(f) + "'");
        }
        feature_data.push_back(v);
      }
      const std::string_view label = fields.back();
      if (label.empty()) throw ParseError(src, line_no, "empty label");
      auto it = label_index.find(label);
      if (it == label_index.end()) {
        it = label_index.emplace(std::string(label), static_cast<std::int32_t>(ds.label_names.size()))
                 .first;
        ds.label_names.emplace_back(label);
      }
      ds.labels.push_back(it->second);
      ds.node_ids.push_back(std::move(id));
    }
  }
  const std::size_t n = ds.node_ids.size();
  ds.features = Tensor(n, n_features, std::move(feature_data));
  ds.class_count = ds.label_names.size();

  LoadReport rep;
  std::set<Edge> edge_set;
  {
    std::ifstream in = open_or_throw(cites_path);
    const std::string src = cites_path.string();
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const std::string_view line = strip_cr(raw);
      if (is_blank(line)) continue;
      const auto fields = split_whitespace(line);
      if (fields.size() != 2) throw ParseError(src, line_no, "expected two node ids");
      ++rep.raw_cite_lines;
      const auto a = index_of.find(std::string(fields[0]));
      const auto b = index_of.find(std::string(fields[1]));
      if (a == index_of.end() || b == index_of.end()) {
        ++rep.skipped_unknown;
        continue;
      }
      if (a->second == b->second) {
        ++rep.skipped_self;
        continue;
      }
      const auto u = static_cast<NodeId>(std::min(a->second, b->second));
      const auto v = static_cast<NodeId>(std::max(a->second, b->second));
      if (!edge_set.emplace(u, v).second) ++rep.duplicate_edges;
    }
  }
  ds.edges.assign(edge_set.begin(), edge_set.end());
  if (report != nullptr) *report = rep;
  ds.validate();
  return ds;
}

Tensor row_normalize(const Tensor& features) {
  Tensor out = features;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double s = 0.0;
    for (double v : row) s += v;
    if (s == 0.0) continue;
    for (double& v : row) v /= s;
  }
  return out;
}

Split make_split(const Dataset& dataset, std::size_t per_class_train, std::size_t n_val,
                 std::size_t n_test) {
  const std::size_t n = dataset.n_nodes();
  std::vector<char> used(n, 0);
  std::vector<std::size_t> taken(dataset.class_count, 0);
  Split s;
  for (std::size_t v = 0; v < n; ++v) {
    const auto c = static_cast<std::size_t>(dataset.labels[v]);
    if (taken[c] < per_class_train) {
      ++taken[c];
      used[v] = 1;
      s.train.push_back(v);
    }
  }
  for (std::size_t c = 0; c < dataset.class_count; ++c) {
    if (taken[c] < per_class_train) {
      throw ContractViolation("make_split: class " + std::to_string(c) + " has only " +
                              std::to_string(taken[c]) + " nodes, need " +
                              std::to_string(per_class_train));
    }
  }
  for (std::size_t v = 0; v < n && s.val.size() < n_val; ++v) {
    if (!used[v]) {
      used[v] = 1;
      s.val.push_back(v);
    }
  }
  for (std::size_t v = n; v-- > 0 && s.test.size() < n_test;) {
    if (!used[v]) {
      used[v] = 1;
      s.test.push_back(v);
    }
  }
  if (s.val.size() < n_val || s.test.size() < n_test) {
    throw ContractViolation("make_split: not enough nodes for " + std::to_string(n_val) +
                            " validation and " + std::to_string(n_test) + " test nodes");
  }
  std::reverse(s.test.begin(), s.test.end());
  return s;
}

Dataset make_two_cluster(std::size_t n_nodes) {
  if (n_nodes < 4 || n_nodes % 2 != 0) {
    throw ContractViolation("make_two_cluster: need an even node count >= 4");
  }
  Dataset ds;
  ds.class_count = 2;
  ds.label_names = {"cluster0", "cluster1"};
  ds.features = Tensor(n_nodes, 2);
  for (std::size_t v = 0; v < n_nodes; ++v) {
    ds.labels.push_back(static_cast<std::int32_t>(v % 2));
    ds.features(v, v % 2) = 1.0;
    ds.node_ids.push_back(std::to_string(v));
  }
  for (std::size_t u = 0; u < n_nodes; ++u) {
    for (std::size_t v = u + 1; v < n_nodes; ++v) {
      if (u % 2 == v % 2 || (u == 0 && v == 1)) {
        ds.edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
      }
    }
  }
  return ds;
}

Dataset make_sbm(const SbmOptions& o, Rng& rng) {
  if (o.n_classes == 0 || o.n_features < o.n_classes || o.n_nodes == 0) {
    throw ContractViolation("make_sbm: inconsistent sizes");
  }
  Dataset ds;
  ds.class_count = o.n_classes;
  for (std::size_t c = 0; c < o.n_classes; ++c) ds.label_names.push_back("class" + std::to_string(c));
  for (std::size_t v = 0; v < o.n_nodes; ++v) {
    ds.labels.push_back(static_cast<std::int32_t>(rng.next_u64() % o.n_classes));
    ds.node_ids.push_back(std::to_string(v));
  }
  for (std::size_t u = 0; u < o.n_nodes; ++u) {
    for (std::size_t v = u + 1; v < o.n_nodes; ++v) {
      const double p = ds.labels[u] == ds.labels[v] ? o.p_in : o.p_out;
      if (rng.bernoulli(p)) ds.edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
  }
  const std::size_t slice = o.n_features / o.n_classes;
  ds.features = Tensor(o.n_nodes, o.n_features);
  for (std::size_t v = 0; v < o.n_nodes; ++v) {
    const auto c = static_cast<std::size_t>(ds.labels[v]);
    for (std::size_t w = 0; w < o.words_per_node; ++w) {
      std::size_t word = 0;
      if (rng.bernoulli(o.word_noise)) {
        word = rng.next_u64() % o.n_features;
      } else {
        word = c * slice + rng.next_u64() % slice;
      }
      ds.features(v, word) = 1.0;
    }
  }
  return ds;
}

SparseMatrix adjacency_of(const Dataset& dataset) {
  return build_adjacency(dataset.edges, dataset.n_nodes(), true);
}

void save_dataset_cache(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw MalformedInput("cannot write " + path.string());
  os.write("GDCD", 4);
  detail::write_u32(os, kCacheVersion);
  detail::write_u64(os, ds.n_nodes());
  detail::write_u64(os, ds.n_features());
  detail::write_u64(os, ds.class_count);
  detail::write_u64(os, ds.edges.size());
  for (double v : ds.features.data()) detail::write_f64(os, v);
  for (auto y : ds.labels) detail::write_u32(os, static_cast<std::uint32_t>(y));
  for (const auto& [u, v] : ds.edges) {
    detail::write_u32(os, u);
    detail::write_u32(os, v);
  }
  for (const auto* set : {&ds.split.train, &ds.split.val, &ds.split.test}) {
    detail::write_u64(os, set->size());
    for (auto v : *set) detail::write_u64(os, v);
  }
  for (const auto& id : ds.node_ids) detail::write_string(os, id);
  for (const auto& name : ds.label_names) detail::write_string(os, name);
  if (!os) throw MalformedInput("write failed for " + path.string());
}

Dataset load_dataset_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MalformedInput("cannot open " + path.string());
  const char* what = "dataset cache";
  detail::expect_magic(is, "GDCD", what);
  const std::uint32_t version = detail::read_u32(is, what);
  if (version != kCacheVersion) {
    throw MalformedInput("unsupported dataset cache version " + std::to_string(version));
  }
  constexpr std::uint64_t kLimit = 1ull << 32;
  const auto n = detail::checked_count(detail::read_u64(is, what), kLimit, what);
  const auto f = detail::checked_count(detail::read_u64(is, what), kLimit, what);
  const auto classes = detail::checked_count(detail::read_u64(is, what), kLimit, what);
  const auto n_edges = detail::checked_count(detail::read_u64(is, what), kLimit, what);
  detail::checked_count(n * f, 1ull << 34, what);
  Dataset ds;
  ds.class_count = classes;
  std::vector<double> feats(n * f);
  for (double& v : feats) v = detail::read_f64(is, what);
  ds.features = Tensor(n, f, std::move(feats));
  ds.labels.resize(n);
  for (auto& y : ds.labels) y = static_cast<std::int32_t>(detail::read_u32(is, what));
  ds.edges.resize(n_edges);
  for (auto& [u, v] : ds.edges) {
    u = detail::read_u32(is, what);
    v = detail::read_u32(is, what);
  }
  for (auto* set : {&ds.split.train, &ds.split.val, &ds.split.test}) {
    set->resize(detail::checked_count(detail::read_u64(is, what), n, what));
    for (auto& v : *set) v = detail::read_u64(is, what);
  }
  ds.node_ids.resize(n);
  for (auto& id : ds.node_ids) id = detail::read_string(is, what);
  ds.label_names.resize(classes);
  for (auto& name : ds.label_names) name = detail::read_string(is, what);
  ds.validate();
  return ds;
}

}  // namespace gdc
