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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.
//
//   kgbias_acceptance [--only N] [--all-seeds] [--search-steps S]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgbias/baseline.hpp"
#include "kgbias/embedding.hpp"
#include "kgbias/eval.hpp"
#include "kgbias/search.hpp"
#include "kgbias/search_space.hpp"
#include "kgbias/train.hpp"
#include "oracle.hpp"

using namespace kgbias;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  bool all_seeds = false;
  std::uint64_t search_steps = 1000;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EmbeddingStore random_store(std::uint32_t entities, std::uint32_t relations, std::uint32_t dim,
                            std::uint64_t seed) {
  TrainConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  cfg.margin = dim;
  return init_embeddings(entities, relations, cfg);
}

// 1 ---------------------------------------------------------------------------

Outcome search_space_arithmetic(const Options&) {
  const auto n = enumerate_terms().size();
  const std::string size = search_space_size().str();
  const std::string distinct = distinct_search_space_size().str();
  const bool ok = n == 56 && size == "523347633027360537213511521" && size.size() == 27 &&
                  size.rfind("523", 0) == 0 && distinct == "50031545098999707";
  return {ok, fmt("%zu terms, 3^56 = %s (5.23e26), 3^35 = %s", n, size.c_str(), distinct.c_str())};
}

// 2 ---------------------------------------------------------------------------

Outcome catalog_equivalence(const Options&) {
  Rng rng(2);
  double worst = 0.0;
  std::size_t checks = 0;
  for (const auto& name : catalog_names()) {
    const CompiledSf sf(catalog(name));
    for (std::uint64_t i = 0; i < 100; ++i) {
      const auto dim = static_cast<std::uint32_t>(1 + uniform_index(rng, 64));
      const auto store = random_store(8, 3, dim, derive_seed(2, {i, dim}));
      const Triple t{static_cast<EntityId>(uniform_index(rng, 8)),
                     static_cast<RelationId>(uniform_index(rng, 3)),
                     static_cast<EntityId>(uniform_index(rng, 8))};
      const double expected = oracle::closed_form_score(name, store, t);
      const double got = score(store, sf, t);
      worst = std::max(worst, std::abs(got - expected) / std::max(std::abs(expected), 1e-300));
      ++checks;
    }
  }
  return {worst < 1e-12, fmt("%zu stores over 6 models, worst relative error %.3g", checks, worst)};
}

// 3 ---------------------------------------------------------------------------

// Smallest |f_j| over the batch; central differences are only valid away
// from the kinks of |.|.
double kink_distance(const EmbeddingStore& store, const CompiledSf& sf,
                     const std::vector<Triple>& triples) {
  double least = INFINITY;
  std::vector<double> f(store.dim());
  for (const Triple& t : triples) {
    std::fill(f.begin(), f.end(), 0.0);
    accumulate_ops(sf.ops(), gather_parts(store, t), f);
    for (double v : f) least = std::min(least, std::abs(v));
  }
  return least;
}

Outcome gradient_check(const Options&) {
  constexpr double kStep = 1e-4;
  constexpr double kTolerance = 1e-3;
  Rng rng(3);
  int instances = 0;
  int rejected = 0;
  std::size_t coordinates = 0;
  double worst = 0.0;
  bool ok = true;
  while (instances < 50) {
    const ScoringFunction sf = instances < 12
                                   ? catalog(catalog_names()[instances % 6])
                                   : sample_sf(1 + uniform_index(rng, 6), rng);
    const CompiledSf compiled(sf);
    const auto dim = static_cast<std::uint32_t>(2 + uniform_index(rng, 7));
    const std::uint32_t entities = 6;
    const std::uint32_t relations = 3;
    auto store = random_store(entities, relations, dim, rng());
    Triple positive{static_cast<EntityId>(uniform_index(rng, entities)),
                    static_cast<RelationId>(uniform_index(rng, relations)),
                    static_cast<EntityId>(uniform_index(rng, entities))};
    std::vector<Triple> negatives;
    for (int i = 0; i < 4; ++i) {
      Triple t = positive;
      t.tail = static_cast<EntityId>(uniform_index(rng, entities));
      if (i == 3) t.head = static_cast<EntityId>(uniform_index(rng, entities));
      negatives.push_back(t);
    }
    std::vector<Triple> all = negatives;
    all.push_back(positive);
    // Moving one coordinate by kStep shifts f_j by at most kStep * (1 + max
    // |partner|) <= 3 * kStep for values in [-1, 1].
    if (kink_distance(store, compiled, all) < 10 * kStep) {
      ++rejected;
      continue;
    }
    LossOptions options;
    options.margin = 1.0 + 3.0 * uniform_unit(rng);
    if (instances % 2 == 1) {
      options.weighting = NegativeWeighting::kSelfAdversarial;
      options.adversarial_temperature = 0.5 + uniform_unit(rng);
    }
    std::vector<double> distances;
    for (const Triple& t : negatives) distances.push_back(-score(store, compiled, t));
    // Self-adversarial weights are constants of the gradient; hold them fixed.
    const auto weights = negative_weights(distances, options);
    auto loss_at = [&] {
      return oracle::margin_loss([&](const Triple& t) { return score(store, compiled, t); },
                                 positive, negatives, weights, options.margin);
    };
    SparseGradient grad(store);
    loss_and_grad(store, compiled, positive, negatives, options, grad);

    auto check = [&](std::vector<double>& data, std::size_t row_width, bool entity) {
      for (std::size_t k = 0; k < data.size(); ++k) {
        const double saved = data[k];
        data[k] = saved + kStep;
        const double up = loss_at();
        data[k] = saved - kStep;
        const double down = loss_at();
        data[k] = saved;
        const double numeric = (up - down) / (2 * kStep);
        const auto row = k / row_width;
        const double analytic =
            entity ? std::as_const(grad).entity_row(static_cast<EntityId>(row))[k % row_width]
                   : std::as_const(grad).relation_row(static_cast<RelationId>(row))[k % row_width];
        const double err = std::abs(analytic - numeric) /
                           std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, err);
        if (err > kTolerance) ok = false;
        ++coordinates;
      }
    };
    check(store.entity_data(), 2 * dim, true);
    check(store.relation_data(), 3 * dim, false);
    ++instances;
  }
  return {ok, fmt("50 instances, %zu coordinates, worst relative error %.3g (%d near-kink draws "
                  "skipped)",
                  coordinates, worst, rejected)};
}

// 4 ---------------------------------------------------------------------------

KnowledgeGraph random_small_graph(Rng& rng) {
  const auto n = static_cast<std::uint32_t>(2 + uniform_index(rng, 19));
  const auto r = static_cast<std::uint32_t>(1 + uniform_index(rng, 3));
  std::vector<Triple> all;
  for (EntityId h = 0; h < n; ++h) {
    for (RelationId rel = 0; rel < r; ++rel) {
      for (EntityId t = 0; t < n; ++t) all.push_back({h, rel, t});
    }
  }
  shuffle(all.begin(), all.end(), rng);
  const std::size_t count = 3 + uniform_index(rng, std::min<std::size_t>(all.size() - 3, 60));
  std::vector<Triple> train, valid, test;
  for (std::size_t i = 0; i < count; ++i) {
    const auto u = uniform_index(rng, 10);
    (u < 6 ? train : u < 8 ? valid : test).push_back(all[i]);
  }
  if (test.empty()) test.push_back(all[count]);
  return add_inverse_relations(KnowledgeGraph(n, r, train, valid, test));
}

Outcome ranking_oracle(const Options&) {
  Rng rng(4);
  int mismatches = 0;
  int comparisons = 0;
  for (int i = 0; i < 100; ++i) {
    const auto g = random_small_graph(rng);
    const std::uint64_t salt = rng();
    const auto entoccur = fit_entoccur(g);
    const oracle::FunctionScorer constant([](EntityId, RelationId, EntityId) { return 0.5; });
    // Few distinct values, so ties are common.
    const oracle::FunctionScorer random([salt](EntityId h, RelationId r, EntityId t) {
      return static_cast<double>(mix64(salt ^ (std::uint64_t{h} << 40) ^ (std::uint64_t{r} << 20) ^ t) % 4);
    });
    for (const Scorer* s : std::initializer_list<const Scorer*>{&entoccur, &constant, &random}) {
      for (Split split : {Split::kValid, Split::kTest}) {
        if (g.split(split).empty()) continue;
        const auto got = evaluate(*s, g, split, EvalProtocol::full());
        const auto want = oracle::brute_force_full(*s, g, split);
        ++comparisons;
        if (got.mrr != want.mrr || got.hits1 != want.hits1 || got.hits3 != want.hits3 ||
            got.hits10 != want.hits10) {
          ++mismatches;
        }
      }
    }
  }
  return {mismatches == 0,
          fmt("100 graphs, %d (scorer, split) comparisons, %d mismatches", comparisons, mismatches)};
}

// 5 ---------------------------------------------------------------------------

Outcome head_independence(const Options&) {
  const std::uint32_t entities = 300;
  const std::uint32_t relations = 8;
  const auto store = random_store(entities, relations, 32, 5);
  const CompiledSf autoweird(catalog("autoweird"));
  SyntheticConfig gc = synthetic_preset("wikikg2-like");
  gc.entity_count = entities;
  gc.relation_count = relations / 2;
  gc.triple_count = 5000;
  const auto g = add_inverse_relations(generate_synthetic(gc));
  const auto entoccur = fit_entoccur(g);

  Rng rng(5);
  int violations = 0;
  std::vector<EntityId> tail(1);
  double out[1];
  for (int q = 0; q < 1000; ++q) {
    const auto r = static_cast<RelationId>(uniform_index(rng, relations));
    const auto t = static_cast<EntityId>(uniform_index(rng, entities));
    const double aw = score(store, autoweird, {0, r, t});
    tail[0] = t;
    entoccur.score_tails(0, r, tail, out);
    const double eo = out[0];
    for (EntityId h = 1; h < entities; ++h) {
      const double aw_h = score(store, autoweird, {h, r, t});
      entoccur.score_tails(h, r, tail, out);
      if (std::memcmp(&aw_h, &aw, sizeof(double)) != 0) ++violations;
      if (std::memcmp(&out[0], &eo, sizeof(double)) != 0) ++violations;
    }
  }
  return {violations == 0,
          fmt("1000 (r, t) queries x %u heads, %d bitwise differences", entities, violations)};
}

// 6, 7 ------------------------------------------------------------------------

struct Trained {
  EmbeddingScorer scorer;
  double seconds;
};

Trained train_model(const KnowledgeGraph& g, const char* name, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.dim = 32;
  cfg.max_steps = 5000;
  cfg.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  auto result = train(g, catalog(name), cfg);
  return {EmbeddingScorer(std::move(result.store), catalog(name)), seconds_since(t0)};
}

// Runs `per_seed` for seeds 0..4 until 3 passes or 3 failures settle the
// vote (or all five with --all-seeds).
template <typename PerSeed>
std::pair<int, std::string> vote(const Options& opt, PerSeed per_seed) {
  int passes = 0;
  int fails = 0;
  std::string log;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    if (!opt.all_seeds && (passes >= 3 || fails >= 3)) break;
    const auto [ok, line] = per_seed(seed);
    (ok ? passes : fails)++;
    log += fmt("  seed %llu %s %s\n", static_cast<unsigned long long>(seed), ok ? "yes" : "no",
               line.c_str());
    std::fputs(log.c_str() + log.rfind("  seed"), stderr);
  }
  return {passes, log};
}

Outcome phenomenon(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto raw = generate_synthetic(synthetic_preset("wikikg2-like"));
  const auto g = add_inverse_relations(raw);
  const auto entoccur = fit_entoccur(g);
  const double eo_sampled = evaluate(entoccur, g, Split::kTest, EvalProtocol::sampled(500)).mrr;
  const double eo_full = evaluate(entoccur, g, Split::kTest, EvalProtocol::full()).mrr;
  const bool gap_ok = eo_sampled - eo_full > 0.05;

  const auto [passes, log] = vote(opt, [&](std::uint64_t seed) {
    const auto aw = train_model(g, "autoweird", seed);
    const auto te = train_model(g, "transe", seed);
    const auto sampled = EvalProtocol::sampled(500, seed);
    const double aw_s = evaluate(aw.scorer, g, Split::kTest, sampled).mrr;
    const double te_s = evaluate(te.scorer, g, Split::kTest, sampled).mrr;
    const double aw_f = evaluate(aw.scorer, g, Split::kTest, EvalProtocol::full()).mrr;
    const double te_f = evaluate(te.scorer, g, Split::kTest, EvalProtocol::full()).mrr;
    return std::pair{aw_s > te_s && aw_f <= te_f,
                     fmt("sampled AW %.4f TE %.4f | full AW %.4f TE %.4f", aw_s, te_s, aw_f, te_f)};
  });
  const double elapsed = seconds_since(t0);
  return {gap_ok && passes >= 3,
          fmt("%zu train triples, top-1%% tail share %.3f; EntOccur sampled %.4f - full %.4f = "
              "%.4f; AutoWeird ahead under sampled and not under full for %d seeds; %.0f s\n%s",
              raw.train().size(), top_share(tail_occurrences(raw), 0.01), eo_sampled, eo_full,
              eo_sampled - eo_full, passes, elapsed, log.c_str())};
}

Outcome protocol_correction(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = add_inverse_relations(generate_synthetic(synthetic_preset("biokg-like")));
  const auto [passes, log] = vote(opt, [&](std::uint64_t seed) {
    const auto aw = train_model(g, "autoweird", seed);
    const auto te = train_model(g, "transe", seed);
    const auto sampled = EvalProtocol::sampled(500, seed);
    const auto typed = EvalProtocol::typed(500, seed);
    const double diff_s = evaluate(aw.scorer, g, Split::kTest, sampled).mrr -
                          evaluate(te.scorer, g, Split::kTest, sampled).mrr;
    const double diff_t = evaluate(aw.scorer, g, Split::kTest, typed).mrr -
                          evaluate(te.scorer, g, Split::kTest, typed).mrr;
    return std::pair{diff_t < diff_s, fmt("AW - TE sampled %+.4f typed %+.4f", diff_s, diff_t)};
  });
  return {passes >= 3, fmt("typed negatives shrink AutoWeird's margin for %d seeds; %.0f s\n%s",
                           passes, seconds_since(t0), log.c_str())};
}

// 8 ---------------------------------------------------------------------------

Outcome determinism(const Options&) {
  auto run = [] {
    SyntheticConfig gc = synthetic_preset("biokg-like");
    gc.entity_count = 500;
    gc.triple_count = 6000;
    const auto g = add_inverse_relations(generate_synthetic(gc));
    TrainConfig tc;
    tc.dim = 16;
    tc.max_steps = 200;
    tc.valid_interval = 100;
    tc.seed = 8;
    const auto trained = train(g, catalog("autoweird"), tc);
    const EmbeddingScorer scorer(trained.store, catalog("autoweird"));
    const auto entoccur = fit_entoccur(g);
    std::string out = trained.report.csv();
    for (const auto& p : {EvalProtocol::sampled(100, 8), EvalProtocol::typed(100, 8),
                          EvalProtocol::full()}) {
      out += metrics_json(evaluate(scorer, g, Split::kTest, p), p, Split::kTest, scorer.name());
      out += metrics_json(evaluate(entoccur, g, Split::kTest, p), p, Split::kTest, "entoccur");
    }
    SearchConfig sc;
    sc.budget = 3;
    sc.train = tc;
    sc.train.max_steps = 50;
    sc.train.valid_interval = 50;
    sc.protocol = EvalProtocol::sampled(50);
    sc.seed = 8;
    out += summary_json(run_search(g, sc), sc);
    sc.jobs = 3;
    out += summary_json(run_search(g, sc), sc);
    return out;
  };
  const std::string a = run();
  const std::string b = run();
  return {a == b, fmt("two runs of generate, train, eval (3 protocols x 2 scorers) and search: "
                      "%zu bytes, %s",
                      a.size(), a == b ? "identical" : "different")};
}

// 9 ---------------------------------------------------------------------------

Outcome search_correctness(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = add_inverse_relations(generate_synthetic(synthetic_preset("wikikg2-like")));
  SearchConfig cfg;
  cfg.budget = 10;
  cfg.train.max_steps = opt.search_steps;
  cfg.train.valid_interval = opt.search_steps;
  const auto result = run_search(g, cfg);
  double max_valid = -1.0;
  for (const auto& t : result.leaderboard) max_valid = std::max(max_valid, t.valid_mrr);
  bool ok = result.leaderboard.size() == 10 && result.best().valid_mrr == max_valid;
  int reproduced = 0;
  int head_free = 0;
  for (const auto& t : result.leaderboard) {
    const auto alone = evaluate_candidate(g, cfg, parse_sf(t.spec), t.per_candidate_seed,
                                          t.trial_index);
    if (alone.valid_mrr == t.valid_mrr && alone.test_mrr == t.test_mrr) ++reproduced;
    head_free += t.uses_head ? 0 : 1;
  }
  ok = ok && reproduced == 10;
  return {ok, fmt("best %s valid MRR %.4f is the maximum; %d/10 trials reproduced from their "
                  "seeds; %d head-free candidates; %llu steps per trial; %.0f s",
                  result.best().spec.c_str(), result.best().valid_mrr, reproduced, head_free,
                  static_cast<unsigned long long>(opt.search_steps), seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgbias acceptance checks"};
  int only = 0;
  Options opt;
  app.add_option("--only", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  app.add_flag("--all-seeds", opt.all_seeds, "run all five seeds even once the vote is settled");
  app.add_option("--search-steps", opt.search_steps, "training steps per search trial");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome(const Options&)>>> criteria{
      {"search space size", search_space_arithmetic},
      {"catalog equivalence", catalog_equivalence},
      {"gradient check", gradient_check},
      {"ranking oracle", ranking_oracle},
      {"head independence", head_independence},
      {"sampled vs full ranking", phenomenon},
      {"typed protocol correction", protocol_correction},
      {"determinism", determinism},
      {"search correctness", search_correctness},
  };
  bool all_ok = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second(opt);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all_ok = all_ok && o.pass;
    const auto newline = o.detail.find('\n');
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.substr(0, newline).c_str());
    if (newline != std::string::npos) std::fputs(o.detail.c_str() + newline + 1, stdout);
    std::fflush(stdout);
  }
  return all_ok ? 0 : 1;
}
