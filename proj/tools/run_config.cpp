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

#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "kgbias/error.hpp"

namespace kgbias::cli {

namespace {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool known_key(std::string_view key) {
  const auto& keys = config_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.name == key; });
}

template <typename T>
T parse_integer(std::string_view key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + text +
                      "' is not a non-negative integer in range");
  }
  return value;
}

double parse_real(std::string_view key, const std::string& text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + text + "' is not a number");
  }
  return value;
}

}  // namespace

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys{
      {"seed", "0", "root seed for the command"},
      {"preset", "", "synthetic preset: wikikg2-like, biokg-like or uniform"},
      {"paper_scale", "false", "use dim 200, 300000 steps, validation every 20000 steps"},
      {"graph", "", "dataset directory"},
      {"out", "", "output directory"},
      {"sf", "", "scoring function: catalog name or term string"},
      {"checkpoint", "", "checkpoint file(s), comma separated"},
      {"scorer", "", "entoccur or oracle, comma separated"},
      // Synthetic graphs.
      {"entity_count", "10000", ""},
      {"relation_count", "20", ""},
      {"triple_count", "125000", "distinct triples before splitting"},
      {"zipf_exponent", "0", ""},
      {"typed", "false", ""},
      {"type_count", "1", ""},
      {"head_signal", "0", "fraction of triples whose tail depends on the head cluster"},
      {"cluster_count", "1", ""},
      {"split_fractions", "0.8,0.1,0.1", "train,valid,test"},
      {"retry_factor", "100", ""},
      // Training.
      {"dim", "32", ""},
      {"learning_rate", "0.0005", ""},
      {"batch_size", "512", ""},
      {"negatives", "128", "negatives per positive"},
      {"margin", "6", ""},
      {"dropout", "0.1", ""},
      {"steps", "5000", ""},
      {"valid_interval", "1000", ""},
      {"weighting", "uniform", "uniform or self-adversarial"},
      {"adversarial_temperature", "1", ""},
      {"valid_negatives", "500", "sampled negatives for validation during training"},
      // Evaluation.
      {"protocol", "sampled:500", "sampled:N, typed:N or full"},
      {"filtered", "true", ""},
      {"filter_scope", "all", "all or train"},
      {"split", "test", "valid or test"},
      {"entoccur_tiebreak", "false", "break EntOccur ties by global tail counts"},
      // Search.
      {"budget", "10", "number of trials"},
      {"num_terms", "4", ""},
      {"jobs", "1", "trials run in parallel"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_.emplace(std::string(k.name), std::string(k.default_value));
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

void RunConfig::set(std::string_view key, std::string value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second = std::move(value);
}

RunConfig RunConfig::resolve(const std::map<std::string, std::string>& file,
                             const std::map<std::string, std::string>& flags) {
  RunConfig cfg;
  auto layered = [&](const std::string& key) -> std::optional<std::string> {
    if (auto it = flags.find(key); it != flags.end()) return it->second;
    if (auto it = file.find(key); it != file.end()) return it->second;
    return std::nullopt;
  };
  if (auto preset = layered("preset"); preset && !preset->empty()) {
    const SyntheticConfig s = synthetic_preset(*preset);
    cfg.set("entity_count", std::to_string(s.entity_count));
    cfg.set("relation_count", std::to_string(s.relation_count));
    cfg.set("triple_count", std::to_string(s.triple_count));
    cfg.set("zipf_exponent", format_real(s.zipf_exponent));
    cfg.set("typed", s.typed ? "true" : "false");
    cfg.set("type_count", std::to_string(s.type_count));
    cfg.set("head_signal", format_real(s.head_signal));
    cfg.set("cluster_count", std::to_string(s.cluster_count));
    cfg.set("split_fractions", format_real(s.split_fractions[0]) + "," +
                                   format_real(s.split_fractions[1]) + "," +
                                   format_real(s.split_fractions[2]));
  }
  if (auto paper = layered("paper_scale")) {
    cfg.set("paper_scale", *paper);
    if (cfg.flag("paper_scale")) {
      cfg.set("dim", "200");
      cfg.set("steps", "300000");
      cfg.set("valid_interval", "20000");
    }
  }
  for (const auto& [k, v] : file) cfg.set(k, v);
  for (const auto& [k, v] : flags) cfg.set(k, v);
  return cfg;
}

std::string RunConfig::text() const {
  std::string out;
  for (const auto& k : config_keys()) {
    out += std::string(k.name) + "=" + get(k.name) + "\n";
  }
  return out;
}

void RunConfig::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / kConfigFileName, std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / kConfigFileName).string());
  out << text();
}

std::uint64_t RunConfig::u64(std::string_view key) const {
  return parse_integer<std::uint64_t>(key, get(key));
}

std::uint32_t RunConfig::u32(std::string_view key) const {
  return parse_integer<std::uint32_t>(key, get(key));
}

double RunConfig::real(std::string_view key) const { return parse_real(key, get(key)); }

bool RunConfig::flag(std::string_view key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad value for " + std::string(key) + ": '" + v + "' is not a boolean");
}

std::vector<std::string> RunConfig::list(std::string_view key) const {
  std::vector<std::string> out;
  const std::string& v = get(key);
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = std::min(v.find(',', start), v.size());
    if (auto item = trim(std::string_view(v).substr(start, comma - start)); !item.empty()) {
      out.push_back(std::move(item));
    }
    start = comma + 1;
  }
  return out;
}

SyntheticConfig RunConfig::synthetic() const {
  SyntheticConfig s;
  s.entity_count = u32("entity_count");
  s.relation_count = u32("relation_count");
  s.triple_count = u64("triple_count");
  s.zipf_exponent = real("zipf_exponent");
  s.typed = flag("typed");
  s.type_count = u32("type_count");
  s.head_signal = real("head_signal");
  s.cluster_count = u32("cluster_count");
  const auto fractions = list("split_fractions");
  if (fractions.size() != 3) throw ConfigError("split_fractions needs three comma-separated values");
  for (std::size_t i = 0; i < 3; ++i) s.split_fractions[i] = parse_real("split_fractions", fractions[i]);
  s.retry_factor = u64("retry_factor");
  s.seed = u64("seed");
  s.validate();
  return s;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.dim = u32("dim");
  t.learning_rate = real("learning_rate");
  t.batch_size = u32("batch_size");
  t.negatives = u32("negatives");
  t.margin = real("margin");
  t.dropout = real("dropout");
  t.max_steps = u64("steps");
  t.valid_interval = u64("valid_interval");
  const std::string& w = get("weighting");
  if (w == "uniform") {
    t.weighting = NegativeWeighting::kUniform;
  } else if (w == "self-adversarial" || w == "self_adversarial") {
    t.weighting = NegativeWeighting::kSelfAdversarial;
  } else {
    throw ConfigError("weighting must be uniform or self-adversarial, got '" + w + "'");
  }
  t.adversarial_temperature = real("adversarial_temperature");
  t.valid_negatives = u32("valid_negatives");
  t.seed = u64("seed");
  t.validate();
  return t;
}

EvalProtocol RunConfig::protocol() const { return protocol(get("protocol")); }

EvalProtocol RunConfig::protocol(std::string_view label) const {
  EvalProtocol p = EvalProtocol::parse(label, u64("seed"));
  p.filtered = flag("filtered");
  const std::string& scope = get("filter_scope");
  if (scope == "all") {
    p.filter_scope = FilterScope::kAllSplits;
  } else if (scope == "train") {
    p.filter_scope = FilterScope::kTrainOnly;
  } else {
    throw ConfigError("filter_scope must be all or train, got '" + scope + "'");
  }
  return p;
}

SearchConfig RunConfig::search() const {
  SearchConfig s;
  s.budget = u32("budget");
  s.num_terms = u32("num_terms");
  s.train = train();
  s.protocol = protocol();
  s.seed = u64("seed");
  s.jobs = u32("jobs");
  s.validate();
  return s;
}

Split RunConfig::split() const {
  const Split s = parse_split(get("split"));
  if (s == Split::kTrain) throw ConfigError("evaluation split must be valid or test");
  return s;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected key=value", line_no);
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (!known_key(key)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'",
                       line_no);
    }
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

}  // namespace kgbias::cli
