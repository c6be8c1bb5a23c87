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
#include <vector>

namespace gdc {

struct BlockRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t width() const noexcept { return end - begin; }
};

/// Splits features [0, width) into n_blocks contiguous groups in original
/// order. When width is not a multiple of n_blocks the first (width % n_blocks)
/// groups get one extra feature. Throws ContractViolation if n_blocks is 0 or
/// exceeds width.
std::vector<BlockRange> block_ranges(std::size_t width, std::size_t n_blocks);

}  // namespace gdc
