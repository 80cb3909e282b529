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

#include "kgbias/graph.hpp"

namespace kgbias {

// Anything that can score candidate tails for a (head, relation) query.
// Higher scores mean more plausible. Implementations must be deterministic
// and safe to call concurrently through a const reference.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // out[i] = score(head, relation, tails[i]); out.size() == tails.size().
  virtual void score_tails(EntityId head, RelationId relation, std::span<const EntityId> tails,
                           std::span<double> out) const = 0;

  virtual std::string name() const = 0;
};

}  // namespace kgbias
