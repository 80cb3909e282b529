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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kgbias/graph.hpp"
#include "kgbias/rng.hpp"
#include "kgbias/scorer.hpp"
#include "kgbias/sf.hpp"

namespace kgbias {

// Dense embedding tables. Entity rows hold parts (e0, e1), relation rows
// (r0, r1, r2), each part `dim` contiguous values.
class EmbeddingStore {
 public:
  static constexpr std::size_t kEntityParts = 2;
  static constexpr std::size_t kRelationParts = 3;

  EmbeddingStore(std::uint32_t entity_count, std::uint32_t relation_count, std::uint32_t dim);

  std::uint32_t entity_count() const noexcept { return entity_count_; }
  std::uint32_t relation_count() const noexcept { return relation_count_; }
  std::uint32_t dim() const noexcept { return dim_; }

  std::span<double> entity_row(EntityId e) {
    return {entities_.data() + entity_offset(e), kEntityParts * dim_};
  }
  std::span<const double> entity_row(EntityId e) const {
    return {entities_.data() + entity_offset(e), kEntityParts * dim_};
  }
  std::span<double> relation_row(RelationId r) {
    return {relations_.data() + relation_offset(r), kRelationParts * dim_};
  }
  std::span<const double> relation_row(RelationId r) const {
    return {relations_.data() + relation_offset(r), kRelationParts * dim_};
  }
  const double* entity_part(EntityId e, std::size_t part) const {
    return entities_.data() + entity_offset(e) + part * dim_;
  }
  const double* relation_part(RelationId r, std::size_t part) const {
    return relations_.data() + relation_offset(r) + part * dim_;
  }

  std::vector<double>& entity_data() noexcept { return entities_; }
  const std::vector<double>& entity_data() const noexcept { return entities_; }
  std::vector<double>& relation_data() noexcept { return relations_; }
  const std::vector<double>& relation_data() const noexcept { return relations_; }

  bool all_finite() const;

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  std::size_t entity_offset(EntityId e) const {
    return static_cast<std::size_t>(e) * kEntityParts * dim_;
  }
  std::size_t relation_offset(RelationId r) const {
    return static_cast<std::size_t>(r) * kRelationParts * dim_;
  }

  std::uint32_t entity_count_;
  std::uint32_t relation_count_;
  std::uint32_t dim_;
  std::vector<double> entities_;
  std::vector<double> relations_;
};

enum class NegativeWeighting { kUniform, kSelfAdversarial };

struct TrainConfig {
  std::uint32_t dim = 32;
  double learning_rate = 0.0005;
  std::uint32_t batch_size = 512;
  std::uint32_t negatives = 128;
  double margin = 6.0;
  double dropout = 0.1;
  std::uint64_t max_steps = 5000;
  std::uint64_t valid_interval = 1000;
  NegativeWeighting weighting = NegativeWeighting::kUniform;
  double adversarial_temperature = 1.0;
  // Negatives used for the periodic validation MRR (SampledUniform, filtered).
  std::uint32_t valid_negatives = 500;
  std::uint64_t seed = 0;

  void validate() const;
};

// Values uniform in [-margin/dim, margin/dim], deterministic in cfg.seed.
EmbeddingStore init_embeddings(std::uint32_t entity_count, std::uint32_t relation_count,
                               const TrainConfig& cfg);
EmbeddingStore init_embeddings(const KnowledgeGraph& g, const TrainConfig& cfg);

// A scoring function lowered to evaluation order: first the terms that do
// not touch the tail, then the tail terms, each group in canonical order.
// Every scoring path runs the same sequence of floating-point operations,
// so batched and single-triple scores agree bit for bit.
class CompiledSf {
 public:
  struct Op {
    double coefficient;
    std::uint8_t left;
    std::uint8_t right;
    bool product;
  };

  explicit CompiledSf(const ScoringFunction& sf);

  const ScoringFunction& source() const noexcept { return source_; }
  std::span<const Op> fixed_ops() const noexcept { return {ops_.data(), split_}; }
  std::span<const Op> tail_ops() const noexcept {
    return {ops_.data() + split_, ops_.size() - split_};
  }
  std::span<const Op> ops() const noexcept { return ops_; }
  bool uses(Part p) const noexcept { return uses_[part_index(p)]; }
  bool uses_head() const noexcept { return uses(Part::kE0H) || uses(Part::kE1H); }
  bool uses_tail() const noexcept { return uses(Part::kE0T) || uses(Part::kE1T); }
  bool uses_relation() const noexcept {
    return uses(Part::kR0) || uses(Part::kR1) || uses(Part::kR2);
  }

 private:
  ScoringFunction source_;
  std::vector<Op> ops_;
  std::size_t split_ = 0;
  std::array<bool, kNumParts> uses_{};
};

// Pointers to the seven part vectors of one triple.
using PartPointers = std::array<const double*, kNumParts>;

PartPointers gather_parts(const EmbeddingStore& store, const Triple& triple);

// g += sum over ops of coefficient * (left [* right]), element-wise.
void accumulate_ops(std::span<const CompiledSf::Op> ops, const PartPointers& parts,
                    std::span<double> g);

// s(h, r, t) = -||f||_1, always <= 0.
double score(const EmbeddingStore& store, const CompiledSf& sf, const Triple& triple);
double score(const EmbeddingStore& store, const ScoringFunction& sf, const Triple& triple);

// Element i equals score(store, sf, {h, r, tails[i]}) exactly.
void score_batch_tails(const EmbeddingStore& store, const CompiledSf& sf, EntityId head,
                       RelationId relation, std::span<const EntityId> tails,
                       std::span<double> out);
std::vector<double> score_batch_tails(const EmbeddingStore& store, const CompiledSf& sf,
                                      EntityId head, RelationId relation,
                                      std::span<const EntityId> tails);

// Scorer over a snapshot of the embeddings.
class EmbeddingScorer final : public Scorer {
 public:
  EmbeddingScorer(EmbeddingStore store, const ScoringFunction& sf)
      : store_(std::move(store)), sf_(sf) {}

  void score_tails(EntityId head, RelationId relation, std::span<const EntityId> tails,
                   std::span<double> out) const override {
    score_batch_tails(store_, sf_, head, relation, tails, out);
  }
  std::string name() const override { return print_sf(sf_.source()); }

  const EmbeddingStore& store() const noexcept { return store_; }

 private:
  EmbeddingStore store_;
  CompiledSf sf_;
};

// Gradient buffers shaped like an EmbeddingStore plus the list of rows that
// received a contribution since the last clear().
class SparseGradient {
 public:
  SparseGradient(std::uint32_t entity_count, std::uint32_t relation_count, std::uint32_t dim);
  explicit SparseGradient(const EmbeddingStore& like)
      : SparseGradient(like.entity_count(), like.relation_count(), like.dim()) {}

  std::uint32_t dim() const noexcept { return dim_; }

  std::span<double> entity_row(EntityId e);
  std::span<double> relation_row(RelationId r);
  std::span<const double> entity_row(EntityId e) const {
    return {entities_.data() + static_cast<std::size_t>(e) * 2 * dim_, 2 * std::size_t{dim_}};
  }
  std::span<const double> relation_row(RelationId r) const {
    return {relations_.data() + static_cast<std::size_t>(r) * 3 * dim_, 3 * std::size_t{dim_}};
  }

  const std::vector<EntityId>& touched_entities() const noexcept { return touched_entities_; }
  const std::vector<RelationId>& touched_relations() const noexcept { return touched_relations_; }

  // Zeroes touched rows only.
  void clear();

 private:
  std::uint32_t dim_;
  std::vector<double> entities_;
  std::vector<double> relations_;
  std::vector<std::uint8_t> entity_touched_;
  std::vector<std::uint8_t> relation_touched_;
  std::vector<EntityId> touched_entities_;
  std::vector<RelationId> touched_relations_;
};

struct LossOptions {
  double margin = 6.0;
  NegativeWeighting weighting = NegativeWeighting::kUniform;
  double adversarial_temperature = 1.0;
};

// Inverted dropout on gathered vectors: each element is kept with
// probability 1 - rate and rescaled by 1 / (1 - rate).
class Dropout {
 public:
  Dropout(double rate, std::uint64_t seed);

  double rate() const noexcept { return rate_; }
  // Fills factors with 0 or 1 / (1 - rate).
  void sample(std::span<double> factors);

 private:
  double rate_;
  double keep_scale_;
  std::uint32_t threshold_;
  std::uint64_t state_;
};

// Margin loss over distances d = -score:
//   L = -log sigmoid(margin - d_pos) - sum_i w_i log sigmoid(d_i - margin)
// with w_i = 1/n (uniform) or softmax(-temperature * d_i) treated as
// constants (self-adversarial). Adds grad_scale * dL/dparams into `grad`
// and returns L. With `dropout`, every gathered vector is masked; the
// positive's head and relation vectors are shared with negatives that keep
// the same head and relation.
double loss_and_grad(const EmbeddingStore& store, const CompiledSf& sf, const Triple& positive,
                     std::span<const Triple> negatives, const LossOptions& options,
                     SparseGradient& grad, double grad_scale = 1.0, Dropout* dropout = nullptr);

// Negative weights as used by loss_and_grad for the given distances.
std::vector<double> negative_weights(std::span<const double> distances,
                                     const LossOptions& options);

struct AdamOptions {
  double learning_rate = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One Adam update over a contiguous block; `step` is the 1-based global step
// used for bias correction.
void adam_update(std::span<double> params, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::uint64_t step, const AdamOptions& options);

// Sparse Adam: only rows listed as touched in the gradient are updated.
// First and second moments persist per row; bias correction uses the number
// of step() calls.
class AdamOptimizer {
 public:
  AdamOptimizer(const EmbeddingStore& like, AdamOptions options);

  void step(EmbeddingStore& store, const SparseGradient& grad);
  std::uint64_t step_count() const noexcept { return step_; }
  const AdamOptions& options() const noexcept { return options_; }

 private:
  AdamOptions options_;
  std::uint64_t step_ = 0;
  std::vector<double> entity_m_, entity_v_;
  std::vector<double> relation_m_, relation_v_;
};

// n corrupted triples (h, r, t') with t' uniform over entities other than t.
// Training negatives are not filtered against known triples. Requires an
// augmented graph (head corruption is covered by inverse relations).
std::vector<Triple> sample_negatives(const KnowledgeGraph& g, const Triple& positive,
                                     std::size_t n, Rng& rng);
void sample_negatives_into(std::uint32_t entity_count, const Triple& positive, Rng& rng,
                           std::span<Triple> out);

// ---------------------------------------------------------------------------
// Checkpoints. Layout, all little-endian:
//   magic "KGBCKPT1" | u32 format_version | u32 dim | u32 entity_count |
//   u32 relation_count | u64 seed | u32 spec_length | spec bytes (canonical
//   print_sf text) | f32 entities[entity_count][2][dim] |
//   f32 relations[relation_count][3][dim]

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EmbeddingStore store;
  std::string spec;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::filesystem::path& path, const EmbeddingStore& store,
                     const ScoringFunction& sf, std::uint64_t seed);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kgbias
