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
#include "kgbias/train.hpp"

#include <chrono>
#include <cstdio>

#include "kgbias/error.hpp"
#include "kgbias/eval.hpp"
#include "kgbias/rng.hpp"

namespace kgbias {

std::string TrainReport::csv() const {
  std::string out = "step,valid_mrr\n";
  char buf[64];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%llu,%.17g\n", static_cast<unsigned long long>(p.step),
                  p.valid_mrr);
    out += buf;
  }
  return out;
}

TrainResult train(const KnowledgeGraph& g, const ScoringFunction& sf, const TrainConfig& cfg,
                  const TrainProgress& progress) {
  cfg.validate();
  if (!g.augmented()) throw ConfigError("training needs a graph with inverse relations");
  if (g.train().empty()) throw Error("empty training set");
  const auto start = std::chrono::steady_clock::now();

  EmbeddingStore store = init_embeddings(g, cfg);
  TrainResult result{store, {}};
  if (cfg.max_steps == 0) return result;

  const CompiledSf compiled(sf);
  const LossOptions loss{cfg.margin, cfg.weighting, cfg.adversarial_temperature};
  AdamOptimizer adam(store, {cfg.learning_rate, 0.9, 0.999, 1e-8});
  SparseGradient grad(store);
  Rng batch_rng(derive_seed(cfg.seed, {kStreamBatch}));
  Dropout dropout(cfg.dropout, derive_seed(cfg.seed, {kStreamDropout}));
  Dropout* dropout_ptr = cfg.dropout > 0.0 ? &dropout : nullptr;

  const EvalProtocol valid_protocol = EvalProtocol::sampled(cfg.valid_negatives, cfg.seed);
  const KnownTriples filter = build_filter(g, valid_protocol.filter_scope);
  const double scale = 1.0 / static_cast<double>(cfg.batch_size);
  std::vector<Triple> negatives(cfg.negatives);
  const auto& train_split = g.train();
  bool have_best = false;

  for (std::uint64_t step = 1; step <= cfg.max_steps; ++step) {
    grad.clear();
    for (std::uint32_t b = 0; b < cfg.batch_size; ++b) {
      const Triple& pos = train_split[uniform_index(batch_rng, train_split.size())];
      sample_negatives_into(g.entity_count(), pos, batch_rng, negatives);
      loss_and_grad(store, compiled, pos, negatives, loss, grad, scale, dropout_ptr);
    }
    adam.step(store, grad);

    if (step % cfg.valid_interval == 0 || step == cfg.max_steps) {
      if (g.valid().empty()) continue;
      const EmbeddingScorer scorer(store, sf);
      const auto metrics = evaluate(scorer, g, Split::kValid, valid_protocol, filter);
      const ValidationPoint point{step, metrics.mrr};
      result.report.curve.push_back(point);
      if (!have_best || metrics.mrr > result.report.best_valid_mrr) {
        have_best = true;
        result.report.best_valid_mrr = metrics.mrr;
        result.report.best_step = step;
        result.store = store;
      }
      if (progress) progress(point);
    }
  }
  // Without a validation split the last iterate is returned.
  if (!have_best) result.store = store;
  result.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace kgbias
