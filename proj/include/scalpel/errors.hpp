// Copyright 2026 The Scalpel Authors
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

#include <stdexcept>
#include <string>

namespace scalpel {

// Errors that map to CLI exit code 2 (bad configuration, bad input files).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Descriptor / config parse failure with a file:line location.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& origin, int line, const std::string& msg)
      : ConfigError(origin + ":" + std::to_string(line) + ": " + msg),
        origin_(origin),
        line_(line) {}

  const std::string& origin() const { return origin_; }
  int line() const { return line_; }

 private:
  std::string origin_;
  int line_;
};

// Errors that map to CLI exit code 1 (runtime failures, broken invariants).
class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace scalpel
