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
#include "kgbias/search.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kgbias/error.hpp"
#include "kgbias/train.hpp"

namespace kgbias {

using nlohmann::ordered_json;

ScoringFunction sample_sf(std::size_t num_terms, Rng& rng) {
  if (num_terms == 0 || num_terms > kNumDistinctTerms) {
    throw ConfigError("num_terms must lie in [1, " + std::to_string(kNumDistinctTerms) +
                      "]: only that many terms are distinct");
  }
  const auto& all = enumerate_terms();
  std::vector<SignedTerm> picked;
  while (picked.size() < num_terms) {
    const Term& term = all[uniform_index(rng, all.size())];
    const bool duplicate = std::any_of(picked.begin(), picked.end(),
                                       [&](const SignedTerm& st) { return st.term == term; });
    if (duplicate) continue;
    const int coefficient = uniform_index(rng, 2) == 0 ? 1 : -1;
    picked.push_back({coefficient, term});
  }
  return ScoringFunction(std::move(picked));
}

void SearchConfig::validate() const {
  if (budget == 0) throw ConfigError("budget must be positive");
  if (num_terms == 0 || num_terms > kNumDistinctTerms) {
    throw ConfigError("num_terms must lie in [1, " + std::to_string(kNumDistinctTerms) + "]");
  }
  if (jobs == 0) throw ConfigError("jobs must be positive");
  train.validate();
}

std::uint64_t trial_seed(const SearchConfig& cfg, std::uint32_t trial_index) {
  return derive_seed(cfg.seed, {kStreamSearchTrial, trial_index});
}

TrialRecord evaluate_candidate(const KnowledgeGraph& g, const SearchConfig& cfg,
                               const ScoringFunction& sf, std::uint64_t per_candidate_seed,
                               std::uint32_t trial_index) {
  TrainConfig tc = cfg.train;
  tc.seed = per_candidate_seed;
  const auto trained = train(g, sf, tc);
  const EmbeddingScorer scorer(trained.store, sf);
  const KnownTriples filter = build_filter(g, cfg.protocol.filter_scope);
  TrialRecord record;
  record.trial_index = trial_index;
  record.spec = print_sf(sf);
  record.per_candidate_seed = per_candidate_seed;
  record.valid_mrr = evaluate(scorer, g, Split::kValid, cfg.protocol, filter).mrr;
  record.test_mrr = evaluate(scorer, g, Split::kTest, cfg.protocol, filter).mrr;
  record.uses_head = uses_head(sf);
  record.train_seconds = trained.report.seconds;
  return record;
}

TrialRecord run_trial(const KnowledgeGraph& g, const SearchConfig& cfg,
                      std::uint32_t trial_index) {
  const std::uint64_t seed = trial_seed(cfg, trial_index);
  Rng rng(seed);
  const ScoringFunction sf = sample_sf(cfg.num_terms, rng);
  return evaluate_candidate(g, cfg, sf, seed, trial_index);
}

std::string trial_json(const TrialRecord& t) {
  ordered_json j;
  j["trial_index"] = t.trial_index;
  j["spec"] = t.spec;
  j["per_candidate_seed"] = t.per_candidate_seed;
  j["valid_mrr"] = t.valid_mrr;
  j["test_mrr"] = t.test_mrr;
  j["uses_head"] = t.uses_head;
  j["train_seconds"] = t.train_seconds;
  return j.dump(2) + "\n";
}

TrialRecord parse_trial_json(const std::string& text) {
  const auto j = ordered_json::parse(text);
  TrialRecord t;
  t.trial_index = j.at("trial_index").get<std::uint32_t>();
  t.spec = j.at("spec").get<std::string>();
  t.per_candidate_seed = j.at("per_candidate_seed").get<std::uint64_t>();
  t.valid_mrr = j.at("valid_mrr").get<double>();
  t.test_mrr = j.at("test_mrr").get<double>();
  t.uses_head = j.at("uses_head").get<bool>();
  t.train_seconds = j.value("train_seconds", 0.0);
  return t;
}

std::string summary_json(const SearchResult& result, const SearchConfig& cfg) {
  ordered_json j;
  j["budget"] = cfg.budget;
  j["num_terms"] = cfg.num_terms;
  j["seed"] = cfg.seed;
  j["protocol"] = cfg.protocol.label();
  j["best_spec"] = result.best().spec;
  j["best_valid_mrr"] = result.best().valid_mrr;
  j["best_uses_head"] = result.best().uses_head;
  ordered_json board = ordered_json::array();
  for (const auto& t : result.leaderboard) {
    ordered_json row;
    row["trial_index"] = t.trial_index;
    row["spec"] = t.spec;
    row["per_candidate_seed"] = t.per_candidate_seed;
    row["valid_mrr"] = t.valid_mrr;
    row["test_mrr"] = t.test_mrr;
    row["uses_head"] = t.uses_head;
    board.push_back(row);
  }
  j["leaderboard"] = board;
  return j.dump(2) + "\n";
}

namespace {

std::filesystem::path trial_path(const std::filesystem::path& dir, std::uint32_t index) {
  char name[32];
  std::snprintf(name, sizeof(name), "trial_%04u.json", index);
  return dir / name;
}

std::optional<TrialRecord> load_completed(const std::filesystem::path& path,
                                          const SearchConfig& cfg, std::uint32_t index) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    TrialRecord t = parse_trial_json(ss.str());
    if (t.trial_index != index || t.per_candidate_seed != trial_seed(cfg, index)) {
      return std::nullopt;
    }
    return t;
  } catch (const std::exception&) {
    // Partially written record from an interrupted run.
    return std::nullopt;
  }
}

}  // namespace

SearchResult run_search(const KnowledgeGraph& g, const SearchConfig& cfg,
                        const std::optional<std::filesystem::path>& ledger_dir) {
  cfg.validate();
  if (ledger_dir) std::filesystem::create_directories(*ledger_dir);

  std::vector<TrialRecord> trials(cfg.budget);
  std::vector<std::uint32_t> pending;
  for (std::uint32_t i = 0; i < cfg.budget; ++i) {
    if (ledger_dir) {
      if (auto done = load_completed(trial_path(*ledger_dir, i), cfg, i)) {
        trials[i] = *done;
        continue;
      }
    }
    pending.push_back(i);
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      try {
        const std::uint32_t i = pending[k];
        trials[i] = run_trial(g, cfg, i);
        if (ledger_dir) {
          const auto path = trial_path(*ledger_dir, i);
          const auto tmp = path.string() + ".tmp";
          {
            std::ofstream out(tmp, std::ios::binary);
            out << trial_json(trials[i]);
          }
          std::filesystem::rename(tmp, path);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = pending.size();
      }
    }
  };
  const std::uint32_t jobs = std::min<std::uint32_t>(cfg.jobs, static_cast<std::uint32_t>(pending.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::uint32_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  SearchResult result{std::move(trials)};
  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const TrialRecord& a, const TrialRecord& b) { return a.valid_mrr > b.valid_mrr; });
  if (ledger_dir) {
    std::ofstream out(*ledger_dir / "summary.json", std::ios::binary);
    out << summary_json(result, cfg);
  }
  return result;
}

}  // namespace kgbias
