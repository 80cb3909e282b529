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
#include <optional>
#include <string>
#include <vector>

#include "kgbias/embedding.hpp"
#include "kgbias/eval.hpp"
#include "kgbias/graph.hpp"
#include "kgbias/rng.hpp"
#include "kgbias/sf.hpp"

namespace kgbias {

// Draws `num_terms` of the 56 ordered terms uniformly, redrawing any pick
// equal (under commutative equality) to an earlier one, and gives each a
// uniform +-1 coefficient.
ScoringFunction sample_sf(std::size_t num_terms, Rng& rng);

struct SearchConfig {
  std::uint32_t budget = 10;
  std::uint32_t num_terms = 4;
  TrainConfig train;
  EvalProtocol protocol = EvalProtocol::sampled(500);
  std::uint64_t seed = 0;
  // Trials run concurrently; each is deterministic on its own.
  std::uint32_t jobs = 1;

  void validate() const;
};

struct TrialRecord {
  std::uint32_t trial_index = 0;
  std::string spec;  // canonical print_sf text
  std::uint64_t per_candidate_seed = 0;
  double valid_mrr = 0.0;
  double test_mrr = 0.0;
  bool uses_head = true;
  double train_seconds = 0.0;
};

struct SearchResult {
  // Sorted by valid MRR descending, ties by trial index.
  std::vector<TrialRecord> leaderboard;

  const TrialRecord& best() const { return leaderboard.front(); }
  ScoringFunction best_sf() const { return parse_sf(leaderboard.front().spec); }
};

std::uint64_t trial_seed(const SearchConfig& cfg, std::uint32_t trial_index);

// Trains `sf` with cfg.train (seed replaced by `per_candidate_seed`) and
// scores it on the valid and test splits under cfg.protocol. Independent of
// every other trial.
TrialRecord evaluate_candidate(const KnowledgeGraph& g, const SearchConfig& cfg,
                               const ScoringFunction& sf, std::uint64_t per_candidate_seed,
                               std::uint32_t trial_index = 0);

// Samples the spec from trial_seed(cfg, i) and runs evaluate_candidate.
TrialRecord run_trial(const KnowledgeGraph& g, const SearchConfig& cfg, std::uint32_t trial_index);

// Random search over scoring functions. With `ledger_dir`, each finished
// trial is written to trial_NNNN.json as it completes and trials already
// present are loaded instead of re-run; summary.json is written at the end.
SearchResult run_search(const KnowledgeGraph& g, const SearchConfig& cfg,
                        const std::optional<std::filesystem::path>& ledger_dir = std::nullopt);

std::string trial_json(const TrialRecord& trial);
TrialRecord parse_trial_json(const std::string& text);
// Deterministic summary (no timings).
std::string summary_json(const SearchResult& result, const SearchConfig& cfg);

}  // namespace kgbias
