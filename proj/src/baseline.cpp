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
#include "kgbias/baseline.hpp"

#include "kgbias/error.hpp"

namespace kgbias {

double EntOccurModel::score(EntityId /*head*/, RelationId relation, EntityId tail) const {
  if (relation >= table_.relation_count() || tail >= table_.entity_count()) {
    throw BoundsError("entoccur query (" + std::to_string(relation) + ", " +
                      std::to_string(tail) + ") out of range");
  }
  double s = static_cast<double>(table_.count(relation, tail));
  if (options_.global_tiebreak) s += options_.epsilon * static_cast<double>(table_.global(tail));
  return s;
}

void EntOccurModel::score_tails(EntityId head, RelationId relation,
                                std::span<const EntityId> tails, std::span<double> out) const {
  if (out.size() != tails.size()) throw BoundsError("score_tails: output size mismatch");
  for (std::size_t i = 0; i < tails.size(); ++i) out[i] = score(head, relation, tails[i]);
}

std::string EntOccurModel::to_csv() const {
  std::string out = "relation,entity,count\n";
  for (RelationId r = 0; r < table_.relation_count(); ++r) {
    const auto counts = table_.relation_counts(r);
    for (EntityId e = 0; e < counts.size(); ++e) {
      if (counts[e] == 0) continue;
      out += std::to_string(r) + ',' + std::to_string(e) + ',' + std::to_string(counts[e]) + '\n';
    }
  }
  return out;
}

EntOccurModel fit_entoccur(const KnowledgeGraph& g, EntOccurOptions options) {
  if (!g.augmented()) {
    throw ConfigError("EntOccur is fitted on a graph with inverse relations");
  }
  return EntOccurModel(tail_occurrences(g, Split::kTrain), options);
}

}  // namespace kgbias
