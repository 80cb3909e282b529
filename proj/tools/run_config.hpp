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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgbias/embedding.hpp"
#include "kgbias/eval.hpp"
#include "kgbias/graph.hpp"
#include "kgbias/search.hpp"

namespace kgbias::cli {

struct KeySpec {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

// Every key a run understands, in the order the resolved config is written.
const std::vector<KeySpec>& config_keys();

// A flat key=value document. Values are resolved in layers: built-in
// defaults, then the preset named by `preset`, then paper-scale training
// values when `paper_scale` is true, then the config file, then flags.
class RunConfig {
 public:
  RunConfig();

  // Layers `file` and `flags` (both already restricted to known keys) over
  // the defaults.
  static RunConfig resolve(const std::map<std::string, std::string>& file,
                           const std::map<std::string, std::string>& flags);

  const std::string& get(std::string_view key) const;
  void set(std::string_view key, std::string value);

  std::string text() const;  // key=value lines, config_keys() order
  void write(const std::filesystem::path& dir) const;

  std::uint64_t u64(std::string_view key) const;
  std::uint32_t u32(std::string_view key) const;
  double real(std::string_view key) const;
  bool flag(std::string_view key) const;
  std::vector<std::string> list(std::string_view key) const;

  SyntheticConfig synthetic() const;
  TrainConfig train() const;
  EvalProtocol protocol() const;
  EvalProtocol protocol(std::string_view label) const;
  SearchConfig search() const;
  Split split() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

// Parses a config file: key=value lines, '#' comments, blank lines ignored.
// Unknown keys and malformed lines throw ParseError with the line number.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

inline constexpr std::string_view kConfigFileName = "config.txt";

}  // namespace kgbias::cli
