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

#include "gdc/blocks.hpp"

#include <string>

#include "gdc/error.hpp"

namespace gdc {

std::vector<BlockRange> block_ranges(std::size_t width, std::size_t n_blocks) {
  if (n_blocks == 0) throw ContractViolation("block_ranges: n_blocks must be >= 1");
  if (n_blocks > width) {
    throw ContractViolation("block_ranges: " + std::to_string(n_blocks) +
                            " blocks exceed feature width " + std::to_string(width));
  }
  std::vector<BlockRange> out(n_blocks);
  const std::size_t base = width / n_blocks;
  const std::size_t extra = width % n_blocks;
  std::size_t at = 0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t w = base + (b < extra ? 1 : 0);
    out[b] = {at, at + w};
    at += w;
  }
  return out;
}

}  // namespace gdc
