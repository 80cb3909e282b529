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
#include "kgbias/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "kgbias/error.hpp"
#include "kgbias/rng.hpp"

namespace kgbias {

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
  const std::uint64_t rt = (static_cast<std::uint64_t>(t.relation) << 32) | t.tail;
  return static_cast<std::size_t>(mix64(mix64(t.head) ^ rt));
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train|valid|test)");
}

KnowledgeGraph::KnowledgeGraph(std::uint32_t entity_count, std::uint32_t relation_count,
                               std::vector<Triple> train, std::vector<Triple> valid,
                               std::vector<Triple> test,
                               std::optional<std::vector<TypeId>> entity_types,
                               bool augmented)
    : entity_count_(entity_count),
      relation_count_(relation_count),
      train_(std::move(train)),
      valid_(std::move(valid)),
      test_(std::move(test)),
      entity_types_(std::move(entity_types)),
      augmented_(augmented) {
  if (entity_count_ == 0) throw BoundsError("entity_count must be positive");
  if (relation_count_ == 0) throw BoundsError("relation_count must be positive");
  if (augmented_ && relation_count_ % 2 != 0) {
    throw BoundsError("augmented graph must have an even relation_count");
  }

  std::unordered_set<Triple, TripleHash> seen;
  seen.reserve(total_triples());
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    std::unordered_set<Triple, TripleHash> in_split;
    for (const Triple& t : split(s)) {
      if (t.head >= entity_count_ || t.tail >= entity_count_) {
        throw BoundsError("entity id out of range in " + std::string(split_name(s)) +
                          " split: (" + std::to_string(t.head) + ", " +
                          std::to_string(t.relation) + ", " + std::to_string(t.tail) + ")");
      }
      if (t.relation >= relation_count_) {
        throw BoundsError("relation id out of range in " + std::string(split_name(s)) +
                          " split: " + std::to_string(t.relation));
      }
      // Duplicates inside one split are tolerated; overlap across splits is not.
      if (in_split.insert(t).second && !seen.insert(t).second) {
        throw ConfigError("splits are not disjoint: (" + std::to_string(t.head) + ", " +
                          std::to_string(t.relation) + ", " + std::to_string(t.tail) +
                          ") appears in more than one split");
      }
    }
  }

  if (entity_types_) {
    if (entity_types_->size() != entity_count_) {
      throw ConfigError("entity_types has " + std::to_string(entity_types_->size()) +
                        " entries for " + std::to_string(entity_count_) + " entities");
    }
    type_count_ = 1 + *std::max_element(entity_types_->begin(), entity_types_->end());
  }
}

const std::vector<Triple>& KnowledgeGraph::split(Split s) const noexcept {
  switch (s) {
    case Split::kTrain:
      return train_;
    case Split::kValid:
      return valid_;
    case Split::kTest:
      return test_;
  }
  return train_;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t parse_uint(std::string_view field, std::size_t line, const std::string& file) {
  std::uint64_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec == std::errc::invalid_argument || ptr != last) {
    throw ParseError(file + ":" + std::to_string(line) + ": expected a non-negative integer, got '" +
                         std::string(field) + "'",
                     line);
  }
  if (ec == std::errc::result_out_of_range || value > std::numeric_limits<std::uint32_t>::max()) {
    throw BoundsError(file + ":" + std::to_string(line) + ": id " + std::string(field) +
                      " exceeds the 32-bit id range");
  }
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

template <typename RowFn>
void for_each_tsv_row(const std::filesystem::path& path, std::size_t arity, RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string file = path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != arity) {
      throw ParseError(file + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(arity) + " tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    std::array<std::uint64_t, 3> values{};
    for (std::size_t i = 0; i < arity; ++i) values[i] = parse_uint(fields[i], line_no, file);
    fn(values);
  }
}

std::map<std::string, std::string> read_meta(const std::filesystem::path& path) {
  std::map<std::string, std::string> meta;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("meta.txt:" + std::to_string(line_no) + ": expected key=value", line_no);
    }
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

void write_triples(const std::vector<Triple>& triples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  std::string buf;
  for (const Triple& t : triples) {
    buf += std::to_string(t.head);
    buf += '\t';
    buf += std::to_string(t.relation);
    buf += '\t';
    buf += std::to_string(t.tail);
    buf += '\n';
  }
  out << buf;
}

}  // namespace

std::vector<Triple> read_triples(const std::filesystem::path& path) {
  std::vector<Triple> triples;
  for_each_tsv_row(path, 3, [&](const std::array<std::uint64_t, 3>& v) {
    triples.push_back({static_cast<EntityId>(v[0]), static_cast<RelationId>(v[1]),
                       static_cast<EntityId>(v[2])});
  });
  return triples;
}

KnowledgeGraph load_graph(const std::filesystem::path& dir) {
  auto train = read_triples(dir / "train.tsv");
  if (train.empty()) throw Error("empty training set in " + (dir / "train.tsv").string());
  std::vector<Triple> valid;
  std::vector<Triple> test;
  if (std::filesystem::exists(dir / "valid.tsv")) valid = read_triples(dir / "valid.tsv");
  if (std::filesystem::exists(dir / "test.tsv")) test = read_triples(dir / "test.tsv");

  std::uint64_t max_entity = 0;
  std::uint64_t max_relation = 0;
  for (const auto* s : {&train, &valid, &test}) {
    for (const Triple& t : *s) {
      max_entity = std::max<std::uint64_t>({max_entity, t.head, t.tail});
      max_relation = std::max<std::uint64_t>(max_relation, t.relation);
    }
  }

  std::optional<std::vector<TypeId>> types;
  if (std::filesystem::exists(dir / "types.tsv")) {
    std::vector<std::pair<EntityId, TypeId>> rows;
    for_each_tsv_row(dir / "types.tsv", 2, [&](const std::array<std::uint64_t, 3>& v) {
      rows.emplace_back(static_cast<EntityId>(v[0]), static_cast<TypeId>(v[1]));
      max_entity = std::max<std::uint64_t>(max_entity, v[0]);
    });
    types.emplace();
    types->assign(max_entity + 1, std::numeric_limits<TypeId>::max());
    for (auto [e, ty] : rows) {
      if ((*types)[e] != std::numeric_limits<TypeId>::max()) {
        throw Error("types.tsv assigns entity " + std::to_string(e) + " more than one type");
      }
      (*types)[e] = ty;
    }
  }

  std::uint64_t entity_count = max_entity + 1;
  std::uint64_t relation_count = max_relation + 1;
  bool augmented = false;
  if (std::filesystem::exists(dir / "meta.txt")) {
    const auto meta = read_meta(dir / "meta.txt");
    auto get = [&](const std::string& key) -> std::optional<std::uint64_t> {
      auto it = meta.find(key);
      if (it == meta.end()) return std::nullopt;
      return parse_uint(it->second, 0, "meta.txt");
    };
    if (auto v = get("format_version"); v && *v != kDatasetFormatVersion) {
      throw ConfigError("unsupported dataset format_version " + std::to_string(*v));
    }
    if (auto v = get("entity_count")) {
      if (*v < max_entity + 1) {
        throw BoundsError("meta.txt entity_count " + std::to_string(*v) +
                          " is smaller than the largest entity id + 1");
      }
      entity_count = *v;
    }
    if (auto v = get("relation_count")) {
      if (*v < max_relation + 1) {
        throw BoundsError("meta.txt relation_count " + std::to_string(*v) +
                          " is smaller than the largest relation id + 1");
      }
      relation_count = *v;
    }
    if (auto v = get("augmented")) augmented = *v != 0;
  }
  if (types) {
    types->resize(entity_count, std::numeric_limits<TypeId>::max());
    for (std::size_t e = 0; e < types->size(); ++e) {
      if ((*types)[e] == std::numeric_limits<TypeId>::max()) {
        throw Error("types.tsv has no type for entity " + std::to_string(e));
      }
    }
  }
  return KnowledgeGraph(static_cast<std::uint32_t>(entity_count),
                        static_cast<std::uint32_t>(relation_count), std::move(train),
                        std::move(valid), std::move(test), std::move(types), augmented);
}

void save_graph(const KnowledgeGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_triples(g.train(), dir / "train.tsv");
  write_triples(g.valid(), dir / "valid.tsv");
  write_triples(g.test(), dir / "test.tsv");
  {
    std::ofstream meta(dir / "meta.txt", std::ios::binary);
    if (!meta) throw IoError("cannot write " + (dir / "meta.txt").string());
    meta << "format_version=" << kDatasetFormatVersion << "\n"
         << "entity_count=" << g.entity_count() << "\n"
         << "relation_count=" << g.relation_count() << "\n"
         << "augmented=" << (g.augmented() ? 1 : 0) << "\n";
  }
  if (g.typed()) {
    std::ofstream out(dir / "types.tsv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "types.tsv").string());
    const auto& types = *g.entity_types();
    for (std::size_t e = 0; e < types.size(); ++e) out << e << '\t' << types[e] << '\n';
  } else {
    std::filesystem::remove(dir / "types.tsv");
  }
}

KnowledgeGraph add_inverse_relations(const KnowledgeGraph& g) {
  if (g.augmented()) {
    throw ConfigError("graph already carries inverse relations; refusing to augment twice");
  }
  const RelationId offset = g.relation_count();
  auto augment = [offset](const std::vector<Triple>& in) {
    std::vector<Triple> out;
    out.reserve(in.size() * 2);
    out.insert(out.end(), in.begin(), in.end());
    for (const Triple& t : in) out.push_back({t.tail, t.relation + offset, t.head});
    return out;
  };
  return KnowledgeGraph(g.entity_count(), 2 * g.relation_count(), augment(g.train()),
                        augment(g.valid()), augment(g.test()), g.entity_types(), true);
}

// ---------------------------------------------------------------------------

OccurrenceTable::OccurrenceTable(std::uint32_t entity_count, std::uint32_t relation_count)
    : entity_count_(entity_count),
      relation_count_(relation_count),
      per_relation_(static_cast<std::size_t>(entity_count) * relation_count, 0),
      global_(entity_count, 0) {}

void OccurrenceTable::add(RelationId r, EntityId t) {
  if (r >= relation_count_ || t >= entity_count_) {
    throw BoundsError("occurrence (" + std::to_string(r) + ", " + std::to_string(t) +
                      ") out of range");
  }
  ++per_relation_[index(r, t)];
  ++global_[t];
  ++total_;
}

OccurrenceTable tail_occurrences(const KnowledgeGraph& g, Split split) {
  OccurrenceTable table(g.entity_count(), g.relation_count());
  for (const Triple& t : g.split(split)) table.add(t.relation, t.tail);
  return table;
}

std::vector<HistogramBin> occurrence_histogram(const OccurrenceTable& table) {
  std::map<std::uint64_t, std::uint64_t> bins;
  for (std::uint64_t c : table.global_counts()) {
    if (c > 0) ++bins[c];
  }
  std::vector<HistogramBin> out;
  out.reserve(bins.size());
  for (auto [occurrence, n] : bins) out.push_back({occurrence, n});
  return out;
}

std::string histogram_csv(std::span<const HistogramBin> histogram) {
  std::string out = "occurrence,num_entities\n";
  for (const auto& bin : histogram) {
    out += std::to_string(bin.occurrence);
    out += ',';
    out += std::to_string(bin.num_entities);
    out += '\n';
  }
  return out;
}

double top_share(const OccurrenceTable& table, double fraction) {
  if (table.total() == 0) return 0.0;
  std::vector<std::uint64_t> counts = table.global_counts();
  const auto k = std::min<std::size_t>(
      counts.size(),
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(counts.size()))));
  std::partial_sort(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(k), counts.end(),
                    std::greater<>());
  const std::uint64_t top =
      std::accumulate(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(k),
                      std::uint64_t{0});
  return static_cast<double>(top) / static_cast<double>(table.total());
}

// ---------------------------------------------------------------------------

void SyntheticConfig::validate() const {
  if (entity_count == 0 || relation_count == 0 || triple_count == 0) {
    throw ConfigError("entity_count, relation_count and triple_count must be positive");
  }
  if (!(zipf_exponent >= 0.0) || !std::isfinite(zipf_exponent)) {
    throw ConfigError("zipf_exponent must be a finite non-negative number");
  }
  if (typed && (type_count == 0 || type_count > entity_count)) {
    throw ConfigError("type_count must be in [1, entity_count] for typed graphs");
  }
  if (!(head_signal >= 0.0 && head_signal <= 1.0)) {
    throw ConfigError("head_signal must lie in [0, 1]");
  }
  if (cluster_count == 0) throw ConfigError("cluster_count must be positive");
  double sum = 0.0;
  for (double f : split_fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  if (retry_factor == 0) throw ConfigError("retry_factor must be positive");
}

namespace {

// Inverse-CDF sampler over ranks 1..n with weight k^-s.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += std::pow(static_cast<double>(k + 1), -exponent);
      cdf_[k] = acc;
    }
  }

  std::size_t sample(Rng& rng) const {
    const double u = uniform_unit(rng) * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

KnowledgeGraph generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::uint32_t type_count = cfg.typed ? cfg.type_count : 1;
  const std::uint32_t n_entities = cfg.entity_count;

  auto type_of = [&](EntityId e) -> TypeId { return e % type_count; };
  auto cluster_of = [&](EntityId e) -> std::uint32_t {
    return (e / type_count) % cfg.cluster_count;
  };

  std::vector<std::vector<EntityId>> by_type(type_count);
  for (EntityId e = 0; e < n_entities; ++e) by_type[type_of(e)].push_back(e);

  struct RelationLaw {
    TypeId tail_type;
    std::vector<EntityId> ranking;  // rank k -> entity
  };
  std::vector<RelationLaw> laws(cfg.relation_count);
  for (RelationId r = 0; r < cfg.relation_count; ++r) {
    RelationLaw& law = laws[r];
    law.tail_type = r % type_count;
    law.ranking = by_type[law.tail_type];
    Rng perm_rng(derive_seed(cfg.seed, {kStreamPermutation, r}));
    shuffle(law.ranking.begin(), law.ranking.end(), perm_rng);
  }

  std::map<std::size_t, ZipfSampler> samplers;
  for (const auto& pool : by_type) {
    if (!samplers.contains(pool.size())) {
      samplers.emplace(pool.size(), ZipfSampler(pool.size(), cfg.zipf_exponent));
    }
  }

  Rng rng(derive_seed(cfg.seed, {kStreamGenerate}));
  std::vector<Triple> triples;
  triples.reserve(cfg.triple_count);
  std::unordered_set<Triple, TripleHash> seen;
  seen.reserve(cfg.triple_count);
  const std::uint64_t budget = cfg.retry_factor * cfg.triple_count;
  std::uint64_t attempts = 0;
  while (triples.size() < cfg.triple_count) {
    if (attempts++ >= budget) {
      throw Error("could not draw " + std::to_string(cfg.triple_count) +
                  " distinct triples within " + std::to_string(budget) +
                  " attempts; lower triple_count or zipf_exponent");
    }
    const auto r = static_cast<RelationId>(uniform_index(rng, cfg.relation_count));
    const auto h = static_cast<EntityId>(uniform_index(rng, n_entities));
    const RelationLaw& law = laws[r];
    EntityId t;
    if (cfg.head_signal > 0.0 && uniform_unit(rng) < cfg.head_signal) {
      t = law.ranking[cluster_of(h) % law.ranking.size()];
    } else {
      t = law.ranking[samplers.at(law.ranking.size()).sample(rng)];
    }
    const Triple triple{h, r, t};
    if (seen.insert(triple).second) triples.push_back(triple);
  }

  const auto n = static_cast<double>(triples.size());
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.split_fractions[0] * n));
  const auto n_valid = std::min(triples.size() - n_train,
                                static_cast<std::size_t>(std::llround(cfg.split_fractions[1] * n)));
  std::vector<Triple> train(triples.begin(), triples.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Triple> valid(triples.begin() + static_cast<std::ptrdiff_t>(n_train),
                            triples.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  std::vector<Triple> test(triples.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid),
                           triples.end());

  std::optional<std::vector<TypeId>> types;
  if (cfg.typed) {
    types.emplace(n_entities);
    for (EntityId e = 0; e < n_entities; ++e) (*types)[e] = type_of(e);
  }
  return KnowledgeGraph(n_entities, cfg.relation_count, std::move(train), std::move(valid),
                        std::move(test), std::move(types));
}

SyntheticConfig synthetic_preset(std::string_view name) {
  SyntheticConfig cfg;
  cfg.entity_count = 10000;
  cfg.relation_count = 20;
  cfg.triple_count = 125000;
  cfg.split_fractions = {0.8, 0.1, 0.1};
  if (name == "wikikg2-like") {
    cfg.zipf_exponent = 2.0;
    cfg.head_signal = 0.55;
    cfg.cluster_count = 20;
  } else if (name == "biokg-like") {
    cfg.zipf_exponent = 0.5;
    cfg.typed = true;
    cfg.type_count = 5;
    cfg.head_signal = 0.55;
    cfg.cluster_count = 20;
  } else if (name == "uniform") {
    cfg.zipf_exponent = 0.0;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) +
                      "' (expected wikikg2-like|biokg-like|uniform)");
  }
  return cfg;
}

std::vector<std::string> synthetic_preset_names() {
  return {"wikikg2-like", "biokg-like", "uniform"};
}

}  // namespace kgbias
