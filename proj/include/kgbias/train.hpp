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
#include <functional>
#include <string>
#include <vector>

#include "kgbias/embedding.hpp"
#include "kgbias/graph.hpp"
#include "kgbias/sf.hpp"

namespace kgbias {

struct ValidationPoint {
  std::uint64_t step = 0;
  double valid_mrr = 0.0;

  friend bool operator==(const ValidationPoint&, const ValidationPoint&) = default;
};

struct TrainReport {
  std::vector<ValidationPoint> curve;
  std::uint64_t best_step = 0;  // 0 when no validation point was recorded
  double best_valid_mrr = 0.0;
  double seconds = 0.0;

  // "step,valid_mrr" rows.
  std::string csv() const;
};

struct TrainResult {
  EmbeddingStore store;  // snapshot with the best validation MRR
  TrainReport report;
};

// Called after each validation point.
using TrainProgress = std::function<void(const ValidationPoint&)>;

// Mini-batch training: every step draws batch_size positives uniformly with
// replacement from the training split, pairs each with cfg.negatives
// tail-corrupted negatives, averages the loss over the batch and applies one
// sparse Adam update. Every cfg.valid_interval steps (and at the final step)
// the valid MRR is measured with SampledUniform(cfg.valid_negatives); the
// best snapshot is returned. Deterministic in cfg.seed.
TrainResult train(const KnowledgeGraph& g, const ScoringFunction& sf, const TrainConfig& cfg,
                  const TrainProgress& progress = {});

}  // namespace kgbias
