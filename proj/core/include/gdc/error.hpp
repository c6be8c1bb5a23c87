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
#include <stdexcept>
#include <string>

namespace gdc {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was not met (shape mismatch, bad range, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Input data is structurally invalid (out-of-range node index, bad file).
class MalformedInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public MalformedInput {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : MalformedInput(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Training produced non-finite losses for too many consecutive epochs.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace gdc
