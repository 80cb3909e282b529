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
#include "kgbias/eval.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "json.hpp"

#include "kgbias/error.hpp"
#include "kgbias/rng.hpp"

namespace kgbias {

std::string EvalProtocol::label() const {
  switch (mode) {
    case ProtocolMode::kSampledUniform:
      return "sampled:" + std::to_string(num_negatives);
    case ProtocolMode::kTypedSampled:
      return "typed:" + std::to_string(num_negatives);
    case ProtocolMode::kFullRanking:
      return "full";
  }
  return "unknown";
}

EvalProtocol EvalProtocol::parse(std::string_view label, std::uint64_t seed) {
  if (label == "full") {
    EvalProtocol p = full();
    p.seed = seed;
    return p;
  }
  const auto colon = label.find(':');
  const std::string_view kind = label.substr(0, colon);
  std::uint32_t n = 500;
  if (colon != std::string_view::npos) {
    const std::string_view digits = label.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || n == 0) {
      throw ConfigError("bad negative count in protocol '" + std::string(label) + "'");
    }
  }
  if (kind == "sampled") return sampled(n, seed);
  if (kind == "typed") return typed(n, seed);
  throw ConfigError("unknown protocol '" + std::string(label) +
                    "' (expected sampled:N, typed:N or full)");
}

bool KnownTriples::contains(EntityId head, RelationId relation, EntityId tail) const {
  const auto t = tails(head, relation);
  return std::binary_search(t.begin(), t.end(), tail);
}

std::span<const EntityId> KnownTriples::tails(EntityId head, RelationId relation) const {
  const auto it = tails_.find(key(head, relation));
  if (it == tails_.end()) return {};
  return it->second;
}

KnownTriples build_filter(const KnowledgeGraph& g, FilterScope scope) {
  KnownTriples known;
  auto add = [&](const std::vector<Triple>& triples) {
    for (const Triple& t : triples) known.tails_[KnownTriples::key(t.head, t.relation)].push_back(t.tail);
  };
  add(g.train());
  if (scope == FilterScope::kAllSplits) {
    add(g.valid());
    add(g.test());
  }
  for (auto& [k, tails] : known.tails_) {
    std::sort(tails.begin(), tails.end());
    tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
    known.size_ += tails.size();
  }
  return known;
}

double rank_of_positive(std::span<const double> negative_scores, double positive_score) {
  std::size_t greater = 0;
  std::size_t equal = 0;
  for (double s : negative_scores) {
    greater += s > positive_score;
    equal += s == positive_score;
  }
  return 1.0 + static_cast<double>(greater) + 0.5 * static_cast<double>(equal);
}

namespace {

void check_protocol(const KnowledgeGraph& g, const EvalProtocol& protocol) {
  if (!g.augmented()) {
    throw ConfigError("evaluation needs a graph with inverse relations (head queries are "
                      "inverse-relation tail queries)");
  }
  if (protocol.mode == ProtocolMode::kTypedSampled && !g.typed()) {
    throw ConfigError("protocol " + protocol.label() + " needs entity types; the graph has none");
  }
  if (protocol.mode != ProtocolMode::kFullRanking && protocol.num_negatives == 0) {
    throw ConfigError("sampled protocols need a positive negative count");
  }
}

// Per-evaluation state reused across queries.
class CandidateSampler {
 public:
  CandidateSampler(const KnowledgeGraph& g, const EvalProtocol& protocol)
      : g_(g), protocol_(protocol), marks_(g.entity_count(), 0) {
    if (protocol.mode == ProtocolMode::kTypedSampled) {
      by_type_.resize(g.type_count());
      const auto& types = *g.entity_types();
      for (EntityId e = 0; e < g.entity_count(); ++e) by_type_[types[e]].push_back(e);
    } else {
      all_.resize(g.entity_count());
      std::iota(all_.begin(), all_.end(), EntityId{0});
    }
  }

  // Fills `out` with distinct eligible negatives; returns the shortfall.
  std::size_t sample(const Triple& q, std::size_t query_index, std::span<const EntityId> known,
                     std::vector<EntityId>& out) {
    out.clear();
    const std::vector<EntityId>& pool =
        protocol_.mode == ProtocolMode::kTypedSampled ? by_type_[(*g_.entity_types())[q.tail]]
                                                      : all_;
    // Exclusions inside the pool: the positive and, when filtering, every
    // known-true tail.
    marks_[q.tail] = 1;
    std::size_t excluded = 1;
    std::vector<EntityId>& touched = touched_;
    touched.clear();
    touched.push_back(q.tail);
    if (protocol_.filtered) {
      for (EntityId k : known) {
        if (marks_[k]) continue;
        if (protocol_.mode == ProtocolMode::kTypedSampled &&
            (*g_.entity_types())[k] != (*g_.entity_types())[q.tail]) {
          continue;
        }
        marks_[k] = 1;
        touched.push_back(k);
        ++excluded;
      }
    }
    const std::size_t eligible = pool.size() - excluded;
    const std::size_t want = protocol_.num_negatives;
    Rng rng(derive_seed(protocol_.seed, {kStreamEvalQuery, query_index}));

    if (eligible <= want) {
      for (EntityId e : pool) {
        if (!marks_[e]) out.push_back(e);
      }
    } else if (2 * want <= eligible) {
      // Rejection sampling; chosen entities are marked so draws stay distinct.
      while (out.size() < want) {
        const EntityId e = pool[uniform_index(rng, pool.size())];
        if (marks_[e]) continue;
        marks_[e] = 1;
        touched.push_back(e);
        out.push_back(e);
      }
    } else {
      for (EntityId e : pool) {
        if (!marks_[e]) out.push_back(e);
      }
      // Partial Fisher-Yates: the first `want` slots become a uniform sample.
      for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + uniform_index(rng, out.size() - i);
        std::swap(out[i], out[j]);
      }
      out.resize(want);
    }
    for (EntityId e : touched) marks_[e] = 0;
    return want - out.size();
  }

 private:
  const KnowledgeGraph& g_;
  const EvalProtocol& protocol_;
  std::vector<std::uint8_t> marks_;
  std::vector<EntityId> all_;
  std::vector<std::vector<EntityId>> by_type_;
  std::vector<EntityId> touched_;
};

}  // namespace

std::vector<EntityId> query_candidates(const KnowledgeGraph& g, const Triple& query,
                                       std::size_t query_index, const EvalProtocol& protocol,
                                       const KnownTriples& filter) {
  check_protocol(g, protocol);
  std::vector<EntityId> out;
  const auto known = protocol.filtered ? filter.tails(query.head, query.relation)
                                       : std::span<const EntityId>{};
  if (protocol.mode == ProtocolMode::kFullRanking) {
    for (EntityId e = 0; e < g.entity_count(); ++e) {
      if (e == query.tail || std::binary_search(known.begin(), known.end(), e)) continue;
      out.push_back(e);
    }
    return out;
  }
  CandidateSampler sampler(g, protocol);
  sampler.sample(query, query_index, known, out);
  return out;
}

RankingMetrics evaluate(const Scorer& scorer, const KnowledgeGraph& g, Split split,
                        const EvalProtocol& protocol) {
  check_protocol(g, protocol);
  return evaluate(scorer, g, split, protocol, build_filter(g, protocol.filter_scope));
}

RankingMetrics evaluate(const Scorer& scorer, const KnowledgeGraph& g, Split split,
                        const EvalProtocol& protocol, const KnownTriples& filter) {
  check_protocol(g, protocol);
  const auto& queries = g.split(split);
  RankingMetrics metrics;
  metrics.num_queries = queries.size();
  if (queries.empty()) return metrics;

  double rr_sum = 0.0;
  std::uint64_t h1 = 0, h3 = 0, h10 = 0;
  auto record = [&](double rank) {
    rr_sum += 1.0 / rank;
    h1 += rank <= 1.0;
    h3 += rank <= 3.0;
    h10 += rank <= 10.0;
  };

  if (protocol.mode == ProtocolMode::kFullRanking) {
    // Queries are ranked in groups against cache-sized entity blocks so the
    // entity table streams once per group instead of once per query.
    constexpr std::size_t kQueryBlock = 64;
    constexpr std::size_t kEntityBlock = 512;
    std::vector<EntityId> all(g.entity_count());
    std::iota(all.begin(), all.end(), EntityId{0});
    std::vector<double> scores(kEntityBlock);
    std::vector<double> known_scores;
    std::vector<double> pos(kQueryBlock);
    std::vector<std::size_t> greater(kQueryBlock);
    std::vector<std::size_t> equal(kQueryBlock);
    for (std::size_t q0 = 0; q0 < queries.size(); q0 += kQueryBlock) {
      const std::size_t nq = std::min(kQueryBlock, queries.size() - q0);
      for (std::size_t i = 0; i < nq; ++i) {
        const Triple& q = queries[q0 + i];
        scorer.score_tails(q.head, q.relation, std::span<const EntityId>(&q.tail, 1),
                           std::span<double>(&pos[i], 1));
        greater[i] = 0;
        equal[i] = 0;
      }
      for (std::size_t e0 = 0; e0 < all.size(); e0 += kEntityBlock) {
        const std::size_t ne = std::min(kEntityBlock, all.size() - e0);
        const auto block = std::span<const EntityId>(all).subspan(e0, ne);
        for (std::size_t i = 0; i < nq; ++i) {
          const Triple& q = queries[q0 + i];
          scorer.score_tails(q.head, q.relation, block, std::span<double>(scores).first(ne));
          std::size_t gt = 0;
          std::size_t eq = 0;
          for (std::size_t k = 0; k < ne; ++k) {
            gt += scores[k] > pos[i];
            eq += scores[k] == pos[i];
          }
          greater[i] += gt;
          equal[i] += eq;
        }
      }
      for (std::size_t i = 0; i < nq; ++i) {
        const Triple& q = queries[q0 + i];
        equal[i] -= 1;  // the positive itself
        if (protocol.filtered) {
          const auto known = filter.tails(q.head, q.relation);
          known_scores.resize(known.size());
          scorer.score_tails(q.head, q.relation, known, known_scores);
          for (std::size_t k = 0; k < known.size(); ++k) {
            if (known[k] == q.tail) continue;
            greater[i] -= known_scores[k] > pos[i];
            equal[i] -= known_scores[k] == pos[i];
          }
        }
        record(1.0 + static_cast<double>(greater[i]) + 0.5 * static_cast<double>(equal[i]));
      }
    }
  } else {
    CandidateSampler sampler(g, protocol);
    std::vector<EntityId> negatives;
    std::vector<EntityId> candidates;
    std::vector<double> scores;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const Triple& q = queries[i];
      const auto known = protocol.filtered ? filter.tails(q.head, q.relation)
                                           : std::span<const EntityId>{};
      const std::size_t shortfall = sampler.sample(q, i, known, negatives);
      if (shortfall > 0) {
        ++metrics.short_queries;
        metrics.missing_candidates += shortfall;
      }
      candidates.assign(1, q.tail);
      candidates.insert(candidates.end(), negatives.begin(), negatives.end());
      scores.resize(candidates.size());
      scorer.score_tails(q.head, q.relation, candidates, scores);
      record(rank_of_positive(std::span<const double>(scores).subspan(1), scores[0]));
    }
  }

  const auto n = static_cast<double>(queries.size());
  metrics.mrr = rr_sum / n;
  metrics.hits1 = static_cast<double>(h1) / n;
  metrics.hits3 = static_cast<double>(h3) / n;
  metrics.hits10 = static_cast<double>(h10) / n;
  return metrics;
}

std::string metrics_json(const RankingMetrics& metrics, const EvalProtocol& protocol,
                         Split split, std::string_view scorer_name) {
  nlohmann::ordered_json j;
  if (!scorer_name.empty()) j["scorer"] = scorer_name;
  j["protocol"] = protocol.label();
  j["split"] = split_name(split);
  j["mrr"] = metrics.mrr;
  j["hits1"] = metrics.hits1;
  j["hits3"] = metrics.hits3;
  j["hits10"] = metrics.hits10;
  j["num_queries"] = metrics.num_queries;
  j["seed"] = protocol.seed;
  j["filtered"] = protocol.filtered;
  j["short_queries"] = metrics.short_queries;
  return j.dump();
}

}  // namespace kgbias
