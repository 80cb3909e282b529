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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <utility>
#include <vector>

#include "doctest.h"
#include "kgbias/embedding.hpp"
#include "kgbias/error.hpp"
#include "oracle.hpp"

using namespace kgbias;

namespace {

EmbeddingStore random_store(std::uint32_t entities, std::uint32_t relations, std::uint32_t dim,
                            std::uint64_t seed) {
  TrainConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  cfg.margin = dim;  // values in [-1, 1]
  return init_embeddings(entities, relations, cfg);
}

struct Batch {
  Triple positive;
  std::vector<Triple> negatives;
};

Batch random_batch(std::uint32_t entities, std::uint32_t relations, std::size_t n, Rng& rng) {
  Batch b;
  b.positive = {static_cast<EntityId>(uniform_index(rng, entities)),
                static_cast<RelationId>(uniform_index(rng, relations)),
                static_cast<EntityId>(uniform_index(rng, entities))};
  for (std::size_t i = 0; i < n; ++i) {
    // Mostly tail corruptions, some with a different head or relation.
    Triple t = b.positive;
    t.tail = static_cast<EntityId>(uniform_index(rng, entities));
    if (i % 4 == 3) t.head = static_cast<EntityId>(uniform_index(rng, entities));
    if (i % 5 == 4) t.relation = static_cast<RelationId>(uniform_index(rng, relations));
    b.negatives.push_back(t);
  }
  return b;
}

// Central differences of the frozen-weight loss against loss_and_grad.
void check_gradient(const ScoringFunction& sf, const LossOptions& options, std::uint32_t dim,
                    std::uint64_t seed) {
  constexpr double kStep = 1e-4;
  Rng rng(seed);
  auto store = random_store(6, 3, dim, seed);
  const auto batch = random_batch(6, 3, 5, rng);
  const CompiledSf compiled(sf);

  std::vector<double> distances;
  for (const Triple& t : batch.negatives) distances.push_back(-score(store, compiled, t));
  const auto weights = negative_weights(distances, options);
  auto frozen = [&](const EmbeddingStore& s) {
    return oracle::margin_loss([&](const Triple& t) { return score(s, compiled, t); },
                               batch.positive, batch.negatives, weights, options.margin);
  };

  SparseGradient grad(store);
  const double loss = loss_and_grad(store, compiled, batch.positive, batch.negatives, options, grad);
  CHECK(loss == doctest::Approx(frozen(store)).epsilon(1e-12));

  auto check_block = [&](std::vector<double>& data, auto grad_at) {
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double saved = data[k];
      data[k] = saved + kStep;
      const double up = frozen(store);
      data[k] = saved - kStep;
      const double down = frozen(store);
      data[k] = saved;
      const double numeric = (up - down) / (2 * kStep);
      const double analytic = grad_at(k);
      CHECK(analytic == doctest::Approx(numeric).epsilon(1e-3).scale(1e-4));
    }
  };
  const std::size_t erow = 2 * dim;
  const std::size_t rrow = 3 * dim;
  check_block(store.entity_data(), [&](std::size_t k) {
    return std::as_const(grad).entity_row(static_cast<EntityId>(k / erow))[k % erow];
  });
  check_block(store.relation_data(), [&](std::size_t k) {
    return std::as_const(grad).relation_row(static_cast<RelationId>(k / rrow))[k % rrow];
  });
}

}  // namespace

TEST_CASE("catalog scores match closed forms") {
  Rng rng(3);
  for (const auto& name : catalog_names()) {
    const CompiledSf sf(catalog(name));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto store = random_store(5, 2, 16, seed);
      const Triple t{static_cast<EntityId>(uniform_index(rng, 5)), 1,
                     static_cast<EntityId>(uniform_index(rng, 5))};
      const double expected = oracle::closed_form_score(name, store, t);
      CHECK(score(store, sf, t) == doctest::Approx(expected).epsilon(1e-12));
      CHECK(score(store, sf, t) <= 0.0);
    }
  }
}

TEST_CASE("TransE by hand") {
  EmbeddingStore store(2, 1, 2);
  // e0 of entity 0 = (1, 2), of entity 1 = (0.5, -1); r0 = (0.25, 0.25).
  store.entity_row(0)[0] = 1.0;
  store.entity_row(0)[1] = 2.0;
  store.entity_row(1)[0] = 0.5;
  store.entity_row(1)[1] = -1.0;
  store.relation_row(0)[0] = 0.25;
  store.relation_row(0)[1] = 0.25;
  // |1 + 0.25 - 0.5| + |2 + 0.25 + 1| = 0.75 + 3.25
  CHECK(score(store, catalog("transe"), {0, 0, 1}) == -4.0);
}

TEST_CASE("batched tail scores equal single scores bit for bit") {
  for (std::uint32_t dim : {16u, 32u, 64u, 7u}) {
    const auto store = random_store(40, 3, dim, dim);
    for (const auto& name : catalog_names()) {
      const CompiledSf sf(catalog(name));
      std::vector<EntityId> tails(40);
      for (EntityId e = 0; e < 40; ++e) tails[e] = e;
      const auto batch = score_batch_tails(store, sf, 7, 2, tails);
      for (EntityId e = 0; e < 40; ++e) CHECK(batch[e] == score(store, sf, {7, 2, e}));
      EmbeddingScorer scorer(store, catalog(name));
      std::vector<double> out(40);
      scorer.score_tails(7, 2, tails, out);
      CHECK(out == batch);
    }
  }
}

TEST_CASE("scoring rejects out-of-range ids") {
  const auto store = random_store(3, 1, 4, 0);
  const CompiledSf sf(catalog("transe"));
  CHECK_THROWS_AS(score(store, sf, {3, 0, 0}), BoundsError);
  CHECK_THROWS_AS(score(store, sf, {0, 1, 0}), BoundsError);
  const std::vector<EntityId> tails{0, 5};
  CHECK_THROWS_AS(score_batch_tails(store, sf, 0, 0, tails), BoundsError);
}

TEST_CASE("loss gradient matches central differences") {
  std::uint64_t seed = 11;
  for (const auto& name : catalog_names()) {
    for (std::uint32_t dim : {4u, 16u}) {
      LossOptions uniform;
      uniform.margin = 2.0;
      check_gradient(catalog(name), uniform, dim, seed++);
      LossOptions adversarial = uniform;
      adversarial.weighting = NegativeWeighting::kSelfAdversarial;
      adversarial.adversarial_temperature = 0.5;
      check_gradient(catalog(name), adversarial, dim, seed++);
    }
  }
  // Self-products and first-order-only functions.
  LossOptions options;
  options.margin = 1.0;
  check_gradient(parse_sf("e0h*e0h - e1t*e1t + r1*r1"), options, 8, 99);
  check_gradient(parse_sf("r0 - r1"), options, 8, 100);
  check_gradient(parse_sf("e0h*e0t + e1h - r2*e1t"), options, 32, 101);
}

TEST_CASE("grad_scale multiplies the gradient") {
  const auto store = random_store(6, 2, 8, 5);
  const CompiledSf sf(catalog("triplere"));
  const std::vector<Triple> negs{{0, 1, 2}, {0, 1, 3}};
  SparseGradient a(store), b(store);
  loss_and_grad(store, sf, {0, 1, 4}, negs, {}, a, 1.0);
  loss_and_grad(store, sf, {0, 1, 4}, negs, {}, b, 0.25);
  for (EntityId e : a.touched_entities()) {
    for (std::size_t k = 0; k < 16; ++k) {
      CHECK(std::as_const(b).entity_row(e)[k] ==
            doctest::Approx(0.25 * std::as_const(a).entity_row(e)[k]));
    }
  }
  CHECK_THROWS_AS(loss_and_grad(store, sf, {0, 1, 4}, {}, {}, a), ConfigError);
}

TEST_CASE("negative weights") {
  const std::vector<double> d{1.0, 2.0, 3.0};
  LossOptions uniform;
  for (double w : negative_weights(d, uniform)) CHECK(w == doctest::Approx(1.0 / 3));
  LossOptions adv;
  adv.weighting = NegativeWeighting::kSelfAdversarial;
  const auto w = negative_weights(d, adv);
  const double z = std::exp(-1.0) + std::exp(-2.0) + std::exp(-3.0);
  CHECK(w[0] == doctest::Approx(std::exp(-1.0) / z));
  CHECK(w[2] == doctest::Approx(std::exp(-3.0) / z));
  // Huge distances do not overflow.
  const std::vector<double> big{1e6, 1e6 + 1};
  const auto wb = negative_weights(big, adv);
  CHECK(wb[0] + wb[1] == doctest::Approx(1.0));
}

TEST_CASE("dropout masks are inverted and reproducible") {
  Dropout a(0.25, 9), b(0.25, 9);
  std::vector<double> fa(4001), fb(4001);
  a.sample(fa);
  b.sample(fb);
  CHECK(fa == fb);
  std::size_t zeros = 0;
  for (double f : fa) {
    CHECK((f == 0.0 || f == doctest::Approx(1.0 / 0.75)));
    zeros += f == 0.0;
  }
  CHECK(zeros > 850);
  CHECK(zeros < 1150);
  CHECK_THROWS_AS(Dropout(1.0, 0), ConfigError);
  Dropout none(0.0, 1);
  std::vector<double> ones(10);
  none.sample(ones);
  for (double f : ones) CHECK(f == 1.0);
}

TEST_CASE("dropout changes the loss deterministically") {
  const auto store = random_store(20, 2, 16, 1);
  const CompiledSf sf(catalog("interht"));
  Rng rng(4);
  const auto batch = random_batch(20, 2, 8, rng);
  SparseGradient g1(store), g2(store), g3(store);
  Dropout d1(0.5, 77), d2(0.5, 77);
  const double l1 = loss_and_grad(store, sf, batch.positive, batch.negatives, {}, g1, 1.0, &d1);
  const double l2 = loss_and_grad(store, sf, batch.positive, batch.negatives, {}, g2, 1.0, &d2);
  const double l3 = loss_and_grad(store, sf, batch.positive, batch.negatives, {}, g3, 1.0);
  CHECK(l1 == l2);
  CHECK(l1 != l3);
}

TEST_CASE("adam matches a hand-computed step") {
  AdamOptions o;
  o.learning_rate = 0.1;
  std::vector<double> p{1.0, -2.0}, m(2, 0.0), v(2, 0.0);
  const std::vector<double> g{0.5, -4.0};
  adam_update(p, g, m, v, 1, o);
  // First step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps).
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.1 * 4.0 / (4.0 + 1e-8)));
  CHECK(m[0] == doctest::Approx(0.05));
  CHECK(v[1] == doctest::Approx(0.001 * 16.0));
  // Second step with the same gradient.
  adam_update(p, g, m, v, 2, o);
  const double m2 = 0.9 * 0.05 + 0.1 * 0.5;
  const double v2 = 0.999 * 0.00025 + 0.001 * 0.25;
  const double expected = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8) -
                          0.1 * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(p[0] == doctest::Approx(expected));
}

TEST_CASE("sparse adam touches only rows with gradients") {
  auto store = random_store(4, 2, 3, 2);
  const auto before = store;
  AdamOptimizer opt(store, {});
  SparseGradient grad(store);
  grad.entity_row(2)[0] = 1.0;
  grad.relation_row(1)[4] = -1.0;
  opt.step(store, grad);
  CHECK(opt.step_count() == 1);
  for (EntityId e : {0u, 1u, 3u}) {
    CHECK(std::vector<double>(store.entity_row(e).begin(), store.entity_row(e).end()) ==
          std::vector<double>(before.entity_row(e).begin(), before.entity_row(e).end()));
  }
  CHECK(store.entity_row(2)[0] == doctest::Approx(before.entity_row(2)[0] - 0.0005));
  CHECK(store.entity_row(2)[1] == before.entity_row(2)[1]);
  CHECK(store.relation_row(1)[4] == doctest::Approx(before.relation_row(1)[4] + 0.0005));
  grad.clear();
  CHECK(grad.touched_entities().empty());
  CHECK(std::as_const(grad).entity_row(2)[0] == 0.0);
}

TEST_CASE("negative sampling corrupts tails only") {
  const auto g = add_inverse_relations(KnowledgeGraph(5, 1, {{0, 0, 1}}, {}, {}));
  Rng rng(1);
  const auto negs = sample_negatives(g, {0, 0, 1}, 500, rng);
  std::vector<int> seen(5, 0);
  for (const Triple& t : negs) {
    CHECK(t.head == 0);
    CHECK(t.relation == 0);
    CHECK(t.tail != 1);
    ++seen[t.tail];
  }
  for (EntityId e : {0u, 2u, 3u, 4u}) CHECK(seen[e] > 80);
  const KnowledgeGraph plain(5, 1, {{0, 0, 1}}, {}, {});
  CHECK_THROWS_AS(sample_negatives(plain, {0, 0, 1}, 3, rng), ConfigError);
  std::vector<Triple> out(2);
  CHECK_THROWS_AS(sample_negatives_into(1, {0, 0, 0}, rng, out), ConfigError);
}

TEST_CASE("init is deterministic and bounded") {
  TrainConfig cfg;
  cfg.dim = 8;
  const auto a = init_embeddings(10, 2, cfg);
  const auto b = init_embeddings(10, 2, cfg);
  CHECK(a == b);
  for (double v : a.entity_data()) CHECK(std::abs(v) <= 6.0 / 8);
  cfg.seed = 1;
  CHECK_FALSE(init_embeddings(10, 2, cfg) == a);
}

TEST_CASE("checkpoints round-trip through float32") {
  const auto dir = std::filesystem::temp_directory_path() / "kgbias_ckpt_test";
  std::filesystem::remove_all(dir);
  const auto store = random_store(7, 3, 5, 4);
  const auto sf = catalog("pairre");
  save_checkpoint(dir / "m.ckpt", store, sf, 42);
  const auto back = load_checkpoint(dir / "m.ckpt");
  CHECK(back.seed == 42);
  CHECK(back.spec == print_sf(sf));
  CHECK(back.store.dim() == 5);
  CHECK(back.store.entity_count() == 7);
  for (std::size_t i = 0; i < store.entity_data().size(); ++i) {
    CHECK(back.store.entity_data()[i] == static_cast<double>(static_cast<float>(store.entity_data()[i])));
  }
  // A second save of the loaded store is byte-identical.
  save_checkpoint(dir / "n.ckpt", back.store, sf, 42);
  CHECK(std::filesystem::file_size(dir / "m.ckpt") == std::filesystem::file_size(dir / "n.ckpt"));

  std::ofstream(dir / "bad.ckpt") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), ParseError);
  std::filesystem::resize_file(dir / "n.ckpt", 40);
  CHECK_THROWS_AS(load_checkpoint(dir / "n.ckpt"), ParseError);
}
