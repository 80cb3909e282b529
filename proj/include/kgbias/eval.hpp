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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgbias/graph.hpp"
#include "kgbias/scorer.hpp"

namespace kgbias {

enum class ProtocolMode { kSampledUniform, kTypedSampled, kFullRanking };

// Which splits count as known-true for filtering.
enum class FilterScope { kAllSplits, kTrainOnly };

struct EvalProtocol {
  ProtocolMode mode = ProtocolMode::kSampledUniform;
  std::uint32_t num_negatives = 500;
  bool filtered = true;
  FilterScope filter_scope = FilterScope::kAllSplits;
  std::uint64_t seed = 0;

  static EvalProtocol sampled(std::uint32_t n, std::uint64_t seed = 0) {
    return {ProtocolMode::kSampledUniform, n, true, FilterScope::kAllSplits, seed};
  }
  static EvalProtocol typed(std::uint32_t n, std::uint64_t seed = 0) {
    return {ProtocolMode::kTypedSampled, n, true, FilterScope::kAllSplits, seed};
  }
  static EvalProtocol full() {
    return {ProtocolMode::kFullRanking, 0, true, FilterScope::kAllSplits, 0};
  }

  // "sampled:N", "typed:N" or "full".
  std::string label() const;
  static EvalProtocol parse(std::string_view label, std::uint64_t seed = 0);
};

struct RankingMetrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::uint64_t num_queries = 0;
  // Queries that had fewer eligible negatives than requested, and the total
  // number of missing candidates across them.
  std::uint64_t short_queries = 0;
  std::uint64_t missing_candidates = 0;
};

// Known-true triples keyed by (head, relation), tails sorted.
class KnownTriples {
 public:
  KnownTriples() = default;

  bool contains(EntityId head, RelationId relation, EntityId tail) const;
  std::span<const EntityId> tails(EntityId head, RelationId relation) const;
  // Number of distinct triples.
  std::size_t size() const noexcept { return size_; }

 private:
  friend KnownTriples build_filter(const KnowledgeGraph& g, FilterScope scope);
  static std::uint64_t key(EntityId head, RelationId relation) {
    return (static_cast<std::uint64_t>(head) << 32) | relation;
  }

  std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
  std::size_t size_ = 0;
};

KnownTriples build_filter(const KnowledgeGraph& g, FilterScope scope = FilterScope::kAllSplits);

// 1 + #{neg > pos} + 0.5 * #{neg == pos}: the mean of the optimistic and
// pessimistic ranks.
double rank_of_positive(std::span<const double> negative_scores, double positive_score);

// Ranks the tail of every triple in `split` against candidates chosen by
// `protocol`. Head prediction is covered by the inverse relations of an
// augmented graph, which is required. Negatives for query i are drawn from
// a stream derived from (protocol.seed, i), so results are reproducible and
// queries can be re-run independently.
RankingMetrics evaluate(const Scorer& scorer, const KnowledgeGraph& g, Split split,
                        const EvalProtocol& protocol);
// Same, reusing a filter built for `protocol.filter_scope`.
RankingMetrics evaluate(const Scorer& scorer, const KnowledgeGraph& g, Split split,
                        const EvalProtocol& protocol, const KnownTriples& filter);

// Candidate tails (positive excluded) query `query_index` would be ranked
// against. Exposed for tests and diagnostics.
std::vector<EntityId> query_candidates(const KnowledgeGraph& g, const Triple& query,
                                       std::size_t query_index, const EvalProtocol& protocol,
                                       const KnownTriples& filter);

// {"protocol", "split", "mrr", "hits1", "hits3", "hits10", "num_queries", "seed"}
std::string metrics_json(const RankingMetrics& metrics, const EvalProtocol& protocol,
                         Split split, std::string_view scorer_name = {});

}  // namespace kgbias
