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
#include <string>
#include <vector>

#include "gdc/random.hpp"
#include "gdc/sparse.hpp"
#include "gdc/tensor.hpp"

namespace gdc {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  bool empty() const noexcept { return train.empty() && val.empty() && test.empty(); }
};

/// Node-classification dataset: features, labels and an undirected edge list
/// (each edge once, u < v, no self-loops, sorted).
struct Dataset {
  Tensor features;
  std::vector<std::int32_t> labels;
  std::vector<Edge> edges;
  std::size_t class_count = 0;
  std::vector<std::string> node_ids;
  std::vector<std::string> label_names;
  Split split;

  std::size_t n_nodes() const noexcept { return labels.size(); }
  std::size_t n_features() const noexcept { return features.cols(); }

  /// Throws MalformedInput if any invariant is broken.
  void validate() const;
};

struct LoadReport {
  std::size_t raw_cite_lines = 0;
  std::size_t skipped_unknown = 0;  // cites naming an id absent from content
  std::size_t skipped_self = 0;     // cites of a node to itself
  std::size_t duplicate_edges = 0;  // repeats of an edge already seen (either direction)
};

/// Reads TAB-separated content (`id f_0 ... f_{d-1} label`) and cites
/// (`id_a id_b`) files. Throws ParseError with a line number on malformed
/// lines and on duplicate node ids.
Dataset load_content_cites(const std::filesystem::path& content_path,
                           const std::filesystem::path& cites_path,
                           LoadReport* report = nullptr);

/// Divides each row by its sum; all-zero rows stay zero.
Tensor row_normalize(const Tensor& features);

/// train: first per_class_train nodes of every class in node order;
/// val: the next n_val nodes not in train; test: the last n_test nodes that
/// are in neither. Throws ContractViolation when a class has fewer than
/// per_class_train nodes or not enough nodes remain.
Split make_split(const Dataset& dataset, std::size_t per_class_train, std::size_t n_val,
                 std::size_t n_test);

/// Two equally sized dense clusters (complete subgraphs) joined by one
/// bridge edge, with one-hot cluster features. Node v belongs to cluster v % 2.
Dataset make_two_cluster(std::size_t n_nodes);

struct SbmOptions {
  std::size_t n_nodes = 600;
  std::size_t n_classes = 4;
  std::size_t n_features = 200;
  double p_in = 0.02;
  double p_out = 0.002;
  // Each node activates words mostly from its class's vocabulary slice.
  std::size_t words_per_node = 12;
  double word_noise = 0.3;  // fraction of words drawn from the whole vocabulary
};

/// Stochastic block model with sparse binary bag-of-words features; a small
/// stand-in for a citation graph. Classes are assigned uniformly at random.
Dataset make_sbm(const SbmOptions& options, Rng& rng);

/// Binary cache: magic "GDCD", u32 version, then dimensions and row-major
/// payloads, little-endian.
void save_dataset_cache(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset_cache(const std::filesystem::path& path);

/// Symmetric binary adjacency of the dataset's edges.
SparseMatrix adjacency_of(const Dataset& dataset);

}  // namespace gdc
