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

// Little-endian primitive encoding shared by the dataset cache and the
// parameter checkpoint.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "gdc/error.hpp"

namespace gdc::detail {

inline void write_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 8);
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 4);
}

inline void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& is, char* dst, std::size_t n, const char* what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) {
    throw MalformedInput(std::string("truncated binary file while reading ") + what);
  }
}

inline std::uint64_t read_u64(std::istream& is, const char* what) {
  std::array<unsigned char, 8> b{};
  read_exact(is, reinterpret_cast<char*>(b.data()), 8, what);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
  std::array<unsigned char, 4> b{};
  read_exact(is, reinterpret_cast<char*>(b.data()), 4, what);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double read_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(read_u64(is, what));
}

inline std::string read_string(std::istream& is, const char* what) {
  const std::uint64_t n = read_u64(is, what);
  if (n > (1u << 24)) throw MalformedInput(std::string("implausible string length in ") + what);
  std::string s(n, '\0');
  read_exact(is, s.data(), n, what);
  return s;
}

inline void expect_magic(std::istream& is, const char (&magic)[5], const char* what) {
  char got[4];
  read_exact(is, got, 4, what);
  if (std::memcmp(got, magic, 4) != 0) {
    throw MalformedInput(std::string("bad magic bytes in ") + what + ", expected " + magic);
  }
}

// Guard for element counts read from files before allocating.
inline std::uint64_t checked_count(std::uint64_t n, std::uint64_t limit, const char* what) {
  if (n > limit) throw MalformedInput(std::string("implausible element count in ") + what);
  return n;
}

}  // namespace gdc::detail
