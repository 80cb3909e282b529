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

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kgbias {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using TypeId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept;
};

enum class Split { kTrain, kValid, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

// Immutable knowledge graph with train/valid/test splits over dense ids.
//
// The constructor validates every invariant: ids in bounds, splits pairwise
// disjoint, one type per entity when types are present. `augmented` records
// that inverse relations were added, in which case relations
// [base_relation_count, relation_count) are the inverses of
// [0, base_relation_count).
class KnowledgeGraph {
 public:
  KnowledgeGraph(std::uint32_t entity_count, std::uint32_t relation_count,
                 std::vector<Triple> train, std::vector<Triple> valid,
                 std::vector<Triple> test,
                 std::optional<std::vector<TypeId>> entity_types = std::nullopt,
                 bool augmented = false);

  std::uint32_t entity_count() const noexcept { return entity_count_; }
  std::uint32_t relation_count() const noexcept { return relation_count_; }
  std::uint32_t base_relation_count() const noexcept {
    return augmented_ ? relation_count_ / 2 : relation_count_;
  }
  bool augmented() const noexcept { return augmented_; }

  const std::vector<Triple>& train() const noexcept { return train_; }
  const std::vector<Triple>& valid() const noexcept { return valid_; }
  const std::vector<Triple>& test() const noexcept { return test_; }
  const std::vector<Triple>& split(Split s) const noexcept;
  std::size_t total_triples() const noexcept {
    return train_.size() + valid_.size() + test_.size();
  }

  bool typed() const noexcept { return entity_types_.has_value(); }
  const std::optional<std::vector<TypeId>>& entity_types() const noexcept {
    return entity_types_;
  }
  // Number of distinct type ids (max + 1); 0 when untyped.
  std::uint32_t type_count() const noexcept { return type_count_; }

 private:
  std::uint32_t entity_count_;
  std::uint32_t relation_count_;
  std::vector<Triple> train_;
  std::vector<Triple> valid_;
  std::vector<Triple> test_;
  std::optional<std::vector<TypeId>> entity_types_;
  std::uint32_t type_count_ = 0;
  bool augmented_;
};

// ---------------------------------------------------------------------------
// Ingestion.
//
// A dataset directory holds train.tsv, valid.tsv, test.tsv (head, relation,
// tail as decimal integers separated by tabs, LF line endings), an optional
// types.tsv (entity, type) and an optional meta.txt of key=value lines:
//
//   format_version=1
//   entity_count=<n>
//   relation_count=<n>
//   augmented=<0|1>
//
// Without meta.txt the counts are 1 + the largest id observed.

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

// Parses one TSV triple file. Throws ParseError carrying the 1-based line.
std::vector<Triple> read_triples(const std::filesystem::path& path);

KnowledgeGraph load_graph(const std::filesystem::path& dir);
void save_graph(const KnowledgeGraph& g, const std::filesystem::path& dir);

// Adds (t, r + R, h) for every (h, r, t) in every split, doubling the
// relation count. Throws ConfigError when `g` is already augmented.
KnowledgeGraph add_inverse_relations(const KnowledgeGraph& g);

// ---------------------------------------------------------------------------
// Tail occurrence statistics.

// Dense per-(relation, entity) tail counts over one split.
class OccurrenceTable {
 public:
  OccurrenceTable(std::uint32_t entity_count, std::uint32_t relation_count);

  std::uint32_t entity_count() const noexcept { return entity_count_; }
  std::uint32_t relation_count() const noexcept { return relation_count_; }

  std::uint64_t count(RelationId r, EntityId t) const {
    return per_relation_[index(r, t)];
  }
  std::uint64_t global(EntityId t) const { return global_[t]; }
  const std::vector<std::uint64_t>& global_counts() const noexcept { return global_; }
  std::uint64_t total() const noexcept { return total_; }

  void add(RelationId r, EntityId t);

  // Tail counts for one relation, indexed by entity.
  std::span<const std::uint64_t> relation_counts(RelationId r) const {
    return {per_relation_.data() + static_cast<std::size_t>(r) * entity_count_,
            entity_count_};
  }

 private:
  std::size_t index(RelationId r, EntityId t) const {
    return static_cast<std::size_t>(r) * entity_count_ + t;
  }

  std::uint32_t entity_count_;
  std::uint32_t relation_count_;
  std::vector<std::uint64_t> per_relation_;
  std::vector<std::uint64_t> global_;
  std::uint64_t total_ = 0;
};

OccurrenceTable tail_occurrences(const KnowledgeGraph& g, Split split = Split::kTrain);

struct HistogramBin {
  std::uint64_t occurrence = 0;
  std::uint64_t num_entities = 0;

  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

// (occurrence, number of entities with that global count), ascending,
// entities with zero occurrences omitted.
std::vector<HistogramBin> occurrence_histogram(const OccurrenceTable& table);

std::string histogram_csv(std::span<const HistogramBin> histogram);

// Share of total tail mass held by the top `fraction` of entities
// (ceil(fraction * entity_count) entities, ranked by global count).
double top_share(const OccurrenceTable& table, double fraction);

// ---------------------------------------------------------------------------
// Synthetic graphs.

struct SyntheticConfig {
  std::uint32_t entity_count = 10000;
  std::uint32_t relation_count = 20;
  std::uint64_t triple_count = 125000;
  // Tails follow P(rank k) ∝ k^-zipf_exponent over a per-relation
  // permutation of entities; 0 gives uniform tails.
  double zipf_exponent = 0.0;
  bool typed = false;
  std::uint32_t type_count = 1;
  // Fraction of triples whose tail is tied to the head instead of drawn from
  // the relation's Zipf law: heads are split into cluster_count clusters
  // and the tail is the relation's (cluster(h) + 1)-th most popular entity.
  // 0 reproduces pure relation-tail correlation with no head signal.
  double head_signal = 0.0;
  std::uint32_t cluster_count = 1;
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
  // Attempts allowed, as a multiple of triple_count, before giving up on
  // drawing distinct triples.
  std::uint64_t retry_factor = 100;

  void validate() const;
};

// Deterministic in `cfg`. Throws Error when triple_count distinct triples
// cannot be drawn within the retry budget.
KnowledgeGraph generate_synthetic(const SyntheticConfig& cfg);

// Named presets: "wikikg2-like", "biokg-like", "uniform".
SyntheticConfig synthetic_preset(std::string_view name);
std::vector<std::string> synthetic_preset_names();

}  // namespace kgbias
