// Copyright 2026 The kgbias Authors.
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
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgbias {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text: TSV rows, scoring-function strings, config values.
// `position` is a 1-based line number for files and a 0-based character
// offset for scoring-function strings.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// An id or count outside the range permitted by its owner.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// A file or directory that cannot be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or unsupported configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kgbias
