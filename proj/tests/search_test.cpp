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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "kgbias/error.hpp"
#include "kgbias/search.hpp"

using namespace kgbias;

namespace {

KnowledgeGraph tiny_graph() {
  SyntheticConfig cfg;
  cfg.entity_count = 120;
  cfg.relation_count = 3;
  cfg.triple_count = 1200;
  cfg.zipf_exponent = 1.0;
  return add_inverse_relations(generate_synthetic(cfg));
}

SearchConfig tiny_search() {
  SearchConfig cfg;
  cfg.budget = 4;
  cfg.num_terms = 4;
  cfg.train.dim = 8;
  cfg.train.batch_size = 32;
  cfg.train.negatives = 8;
  cfg.train.max_steps = 20;
  cfg.train.valid_interval = 10;
  cfg.train.valid_negatives = 30;
  cfg.protocol = EvalProtocol::sampled(30);
  cfg.seed = 3;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("kgbias_search_" + name)) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("sampled functions have distinct terms and the requested size") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto sf = sample_sf(6, rng);
    REQUIRE(sf.size() == 6);
    for (std::size_t a = 0; a < sf.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) CHECK_FALSE(sf.terms()[a].term == sf.terms()[b].term);
    }
  }
  Rng all(1);
  CHECK(sample_sf(kNumDistinctTerms, all).size() == kNumDistinctTerms);
  CHECK_THROWS_AS(sample_sf(kNumDistinctTerms + 1, all), ConfigError);
  CHECK_THROWS_AS(sample_sf(0, all), ConfigError);
}

TEST_CASE("single-term draws follow the ordered-term distribution") {
  // A first-order term is 1 of 56 draws; a cross product a*b is 2 of 56.
  Rng rng(5);
  std::map<std::size_t, int> counts;
  int plus = 0;
  const int n = 56000;
  for (int i = 0; i < n; ++i) {
    const auto sf = sample_sf(1, rng);
    counts[sf.terms()[0].term.canonical_index()]++;
    plus += sf.terms()[0].coefficient > 0;
  }
  CHECK(counts.size() == kNumDistinctTerms);
  const int single = counts[0];
  const int cross = counts[Term::product(Part::kE0H, Part::kR0).canonical_index()];
  const int square = counts[Term::product(Part::kR1, Part::kR1).canonical_index()];
  CHECK(single == doctest::Approx(1000).epsilon(0.15));
  CHECK(square == doctest::Approx(1000).epsilon(0.15));
  CHECK(cross == doctest::Approx(2000).epsilon(0.15));
  CHECK(plus == doctest::Approx(n / 2).epsilon(0.03));
}

TEST_CASE("search is deterministic and ranks by valid MRR") {
  const auto g = tiny_graph();
  const auto cfg = tiny_search();
  const auto a = run_search(g, cfg);
  const auto b = run_search(g, cfg);
  REQUIRE(a.leaderboard.size() == 4);
  CHECK(summary_json(a, cfg) == summary_json(b, cfg));
  for (std::size_t i = 1; i < a.leaderboard.size(); ++i) {
    CHECK(a.leaderboard[i - 1].valid_mrr >= a.leaderboard[i].valid_mrr);
  }
  CHECK(a.best_sf() == parse_sf(a.best().spec));
}

TEST_CASE("each trial reproduces in isolation") {
  const auto g = tiny_graph();
  const auto cfg = tiny_search();
  const auto result = run_search(g, cfg);
  for (const auto& t : result.leaderboard) {
    CHECK(t.per_candidate_seed == trial_seed(cfg, t.trial_index));
    const auto alone = run_trial(g, cfg, t.trial_index);
    CHECK(alone.spec == t.spec);
    CHECK(alone.valid_mrr == t.valid_mrr);
    CHECK(alone.test_mrr == t.test_mrr);
    const auto direct = evaluate_candidate(g, cfg, parse_sf(t.spec), t.per_candidate_seed);
    CHECK(direct.valid_mrr == t.valid_mrr);
  }
}

TEST_CASE("parallel trials match the serial run") {
  const auto g = tiny_graph();
  auto cfg = tiny_search();
  const auto serial = summary_json(run_search(g, cfg), cfg);
  cfg.jobs = 3;
  CHECK(summary_json(run_search(g, cfg), cfg) == serial);
}

TEST_CASE("ledger records trials and resumes") {
  const auto g = tiny_graph();
  const auto cfg = tiny_search();
  TempDir dir("ledger");
  const auto first = run_search(g, cfg, dir.path);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::filesystem::exists(dir.path / ("trial_000" + std::to_string(i) + ".json")));
  }
  const std::string summary = slurp(dir.path / "summary.json");
  CHECK(summary == summary_json(first, cfg));

  // A resumed run loads recorded trials verbatim: a doctored record shows up
  // in the result, a deleted or truncated one is recomputed.
  auto rec = parse_trial_json(slurp(dir.path / "trial_0001.json"));
  rec.valid_mrr = 2.0;
  { std::ofstream(dir.path / "trial_0001.json") << trial_json(rec); }
  std::filesystem::remove(dir.path / "trial_0002.json");
  { std::ofstream(dir.path / "trial_0003.json") << "{\"trial_index\": 3,"; }
  const auto resumed = run_search(g, cfg, dir.path);
  CHECK(resumed.best().trial_index == 1);
  CHECK(resumed.best().valid_mrr == 2.0);
  CHECK(std::filesystem::exists(dir.path / "trial_0002.json"));
  for (const auto& t : resumed.leaderboard) {
    if (t.trial_index == 1) continue;
    const auto& orig = *std::find_if(first.leaderboard.begin(), first.leaderboard.end(),
                                     [&](const TrialRecord& o) { return o.trial_index == t.trial_index; });
    CHECK(t.valid_mrr == orig.valid_mrr);
  }
}

TEST_CASE("trial json round trip") {
  TrialRecord t{7, "+e0h -e0t", 123456789012345ULL, 0.25, 0.125, true, 1.5};
  const auto back = parse_trial_json(trial_json(t));
  CHECK(back.trial_index == 7);
  CHECK(back.spec == t.spec);
  CHECK(back.per_candidate_seed == t.per_candidate_seed);
  CHECK(back.valid_mrr == 0.25);
  CHECK(back.test_mrr == 0.125);
  CHECK(back.uses_head);
}

TEST_CASE("search config validation") {
  const auto g = tiny_graph();
  auto cfg = tiny_search();
  cfg.budget = 0;
  CHECK_THROWS_AS(run_search(g, cfg), ConfigError);
  cfg = tiny_search();
  cfg.num_terms = 36;
  CHECK_THROWS_AS(run_search(g, cfg), ConfigError);
  cfg = tiny_search();
  cfg.jobs = 0;
  CHECK_THROWS_AS(run_search(g, cfg), ConfigError);
}
