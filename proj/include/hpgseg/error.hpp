// Copyright 2026 The hpgseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HPGSEG_ERROR_HPP_
#define HPGSEG_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hpgseg {

// Bad input: configuration, preconditions, malformed data. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content. Carries the 1-based line number (0 if unknown).
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  // Same error reported under a source name such as a file path.
  ParseError(const std::string& source, const ParseError& inner)
      : ValidationError(source + ": " + inner.what()), line_(inner.line()) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Filesystem failure. CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A postcondition the library guarantees did not hold. CLI exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hpgseg

#endif  // HPGSEG_ERROR_HPP_
