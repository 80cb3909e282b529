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

#include <string>

#include "kgbias/graph.hpp"
#include "kgbias/scorer.hpp"

namespace kgbias {

struct EntOccurOptions {
  // Adds epsilon * global(t) to break ties between tails with equal
  // per-relation counts. Off by default: the baseline is the raw count.
  bool global_tiebreak = false;
  double epsilon = 1e-6;
};

// Scores (h, r, t) by how often t was the tail of relation r in training.
// The head is ignored.
class EntOccurModel final : public Scorer {
 public:
  EntOccurModel(OccurrenceTable table, EntOccurOptions options = {})
      : table_(std::move(table)), options_(options) {}

  double score(EntityId head, RelationId relation, EntityId tail) const;

  void score_tails(EntityId head, RelationId relation, std::span<const EntityId> tails,
                   std::span<double> out) const override;
  std::string name() const override { return "entoccur"; }

  const OccurrenceTable& table() const noexcept { return table_; }
  const EntOccurOptions& options() const noexcept { return options_; }

  // "relation,entity,count" rows for every non-zero count, ordered by
  // relation then entity.
  std::string to_csv() const;

 private:
  OccurrenceTable table_;
  EntOccurOptions options_;
};

// Fits on the training split of an augmented graph.
EntOccurModel fit_entoccur(const KnowledgeGraph& g, EntOccurOptions options = {});

inline double entoccur_score(const EntOccurModel& model, EntityId head, RelationId relation,
                             EntityId tail) {
  return model.score(head, relation, tail);
}

}  // namespace kgbias
