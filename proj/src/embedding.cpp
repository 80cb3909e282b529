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
#include "kgbias/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <utility>

#include "kgbias/error.hpp"

namespace kgbias {

EmbeddingStore::EmbeddingStore(std::uint32_t entity_count, std::uint32_t relation_count,
                               std::uint32_t dim)
    : entity_count_(entity_count),
      relation_count_(relation_count),
      dim_(dim),
      entities_(static_cast<std::size_t>(entity_count) * kEntityParts * dim, 0.0),
      relations_(static_cast<std::size_t>(relation_count) * kRelationParts * dim, 0.0) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
}

bool EmbeddingStore::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(entities_.begin(), entities_.end(), finite) &&
         std::all_of(relations_.begin(), relations_.end(), finite);
}

void TrainConfig::validate() const {
  if (dim == 0) throw ConfigError("dim must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (negatives == 0) throw ConfigError("negatives must be positive");
  if (!std::isfinite(margin)) throw ConfigError("margin must be finite");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (valid_interval == 0) throw ConfigError("valid_interval must be positive");
  if (!(adversarial_temperature > 0.0)) {
    throw ConfigError("adversarial_temperature must be positive");
  }
  if (valid_negatives == 0) throw ConfigError("valid_negatives must be positive");
}

EmbeddingStore init_embeddings(std::uint32_t entity_count, std::uint32_t relation_count,
                               const TrainConfig& cfg) {
  EmbeddingStore store(entity_count, relation_count, cfg.dim);
  const double bound = std::abs(cfg.margin) / static_cast<double>(cfg.dim);
  Rng rng(derive_seed(cfg.seed, {kStreamInit}));
  for (double& v : store.entity_data()) v = (2.0 * uniform_unit(rng) - 1.0) * bound;
  for (double& v : store.relation_data()) v = (2.0 * uniform_unit(rng) - 1.0) * bound;
  return store;
}

EmbeddingStore init_embeddings(const KnowledgeGraph& g, const TrainConfig& cfg) {
  return init_embeddings(g.entity_count(), g.relation_count(), cfg);
}

// ---------------------------------------------------------------------------

CompiledSf::CompiledSf(const ScoringFunction& sf) : source_(sf) {
  const auto canonical = sf.canonical_terms();
  auto lower = [](const SignedTerm& st) {
    return Op{static_cast<double>(st.coefficient),
              static_cast<std::uint8_t>(part_index(st.term.left())),
              static_cast<std::uint8_t>(part_index(st.term.right())), st.term.second_order()};
  };
  auto touches_tail = [](const SignedTerm& st) {
    return is_tail_part(st.term.left()) || is_tail_part(st.term.right());
  };
  for (const auto& st : canonical) {
    if (!touches_tail(st)) ops_.push_back(lower(st));
  }
  split_ = ops_.size();
  for (const auto& st : canonical) {
    if (touches_tail(st)) ops_.push_back(lower(st));
  }
  for (Part p : kAllParts) uses_[part_index(p)] = sf.uses(p);
}

PartPointers gather_parts(const EmbeddingStore& store, const Triple& triple) {
  return {store.entity_part(triple.head, 0),     store.entity_part(triple.head, 1),
          store.relation_part(triple.relation, 0), store.relation_part(triple.relation, 1),
          store.relation_part(triple.relation, 2), store.entity_part(triple.tail, 0),
          store.entity_part(triple.tail, 1)};
}

void accumulate_ops(std::span<const CompiledSf::Op> ops, const PartPointers& parts,
                    std::span<double> g) {
  const std::size_t d = g.size();
  double* __restrict out = g.data();
  for (const auto& op : ops) {
    const double c = op.coefficient;
    const double* __restrict a = parts[op.left];
    if (op.product) {
      const double* __restrict b = parts[op.right];
      for (std::size_t j = 0; j < d; ++j) out[j] += c * (a[j] * b[j]);
    } else {
      for (std::size_t j = 0; j < d; ++j) out[j] += c * a[j];
    }
  }
}

namespace {

// Sum of |g_j| with eight interleaved partial sums combined pairwise. The
// fixed association order keeps every caller bit-identical while letting
// the loop vectorize.
double l1(std::span<const double> g) {
  constexpr std::size_t kLanes = 8;
  double lanes[kLanes] = {};
  const std::size_t n = g.size();
  const std::size_t full = n - n % kLanes;
  const double* __restrict p = g.data();
  for (std::size_t j = 0; j < full; j += kLanes) {
    for (std::size_t k = 0; k < kLanes; ++k) lanes[k] += std::abs(p[j + k]);
  }
  for (std::size_t j = full; j < n; ++j) lanes[j - full] += std::abs(p[j]);
  return ((lanes[0] + lanes[4]) + (lanes[2] + lanes[6])) +
         ((lanes[1] + lanes[5]) + (lanes[3] + lanes[7]));
}

void check_triple(const EmbeddingStore& store, const Triple& t) {
  if (t.head >= store.entity_count() || t.tail >= store.entity_count() ||
      t.relation >= store.relation_count()) {
    throw BoundsError("triple (" + std::to_string(t.head) + ", " + std::to_string(t.relation) +
                      ", " + std::to_string(t.tail) + ") outside the embedding tables");
  }
}

template <std::size_t D>
struct Dim {
  static constexpr std::size_t get(std::size_t) { return D; }
};
template <>
struct Dim<0> {
  static std::size_t get(std::size_t d) { return d; }
};

// Prefetches the 2 x d entity row of `e` into cache.
inline void prefetch_row(const double* row, std::size_t doubles) {
  for (std::size_t j = 0; j < doubles; j += 8) __builtin_prefetch(row + j);
}

template <std::size_t D>
void copy_vec(const double* __restrict src, double* __restrict dst, std::size_t dim) {
  const std::size_t d = Dim<D>::get(dim);
  for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
}

template <std::size_t D>
void zero_vec(double* dst, std::size_t dim) {
  const std::size_t d = Dim<D>::get(dim);
  for (std::size_t j = 0; j < d; ++j) dst[j] = 0.0;
}

template <std::size_t D>
void axpy_ops(std::span<const CompiledSf::Op> ops, const PartPointers& parts, double* __restrict g,
              std::size_t dim) {
  const std::size_t d = Dim<D>::get(dim);
  for (const auto& op : ops) {
    const double c = op.coefficient;
    const double* __restrict a = parts[op.left];
    if (op.product) {
      const double* __restrict b = parts[op.right];
      #pragma GCC ivdep
      for (std::size_t j = 0; j < d; ++j) g[j] += c * (a[j] * b[j]);
    } else {
      #pragma GCC ivdep
      for (std::size_t j = 0; j < d; ++j) g[j] += c * a[j];
    }
  }
}

}  // namespace

double score(const EmbeddingStore& store, const CompiledSf& sf, const Triple& triple) {
  check_triple(store, triple);
  std::vector<double> g(store.dim(), 0.0);
  const auto parts = gather_parts(store, triple);
  accumulate_ops(sf.fixed_ops(), parts, g);
  accumulate_ops(sf.tail_ops(), parts, g);
  return -l1(g);
}

double score(const EmbeddingStore& store, const ScoringFunction& sf, const Triple& triple) {
  return score(store, CompiledSf(sf), triple);
}

namespace {

template <std::size_t D>
void score_batch_impl(const EmbeddingStore& store, const CompiledSf& sf, EntityId head,
                      RelationId relation, std::span<const EntityId> tails,
                      std::span<double> out) {
  const std::size_t d = Dim<D>::get(store.dim());
  thread_local std::vector<double> buffer;
  buffer.assign(2 * d, 0.0);
  double* partial = buffer.data();
  double* g = buffer.data() + d;
  auto parts = gather_parts(store, {head, relation, 0});
  axpy_ops<D>(sf.fixed_ops(), parts, partial, d);
  const auto tail_ops = sf.tail_ops();
  for (std::size_t i = 0; i < tails.size(); ++i) {
    if (tails[i] >= store.entity_count()) {
      throw BoundsError("tail id " + std::to_string(tails[i]) + " outside the embedding tables");
    }
    parts[part_index(Part::kE0T)] = store.entity_part(tails[i], 0);
    parts[part_index(Part::kE1T)] = store.entity_part(tails[i], 1);
    copy_vec<D>(partial, g, d);
    axpy_ops<D>(tail_ops, parts, g, d);
    out[i] = -l1({g, d});
  }
}

}  // namespace

void score_batch_tails(const EmbeddingStore& store, const CompiledSf& sf, EntityId head,
                       RelationId relation, std::span<const EntityId> tails,
                       std::span<double> out) {
  if (out.size() != tails.size()) throw BoundsError("score_batch_tails: output size mismatch");
  if (tails.empty()) return;
  check_triple(store, {head, relation, 0});
  switch (store.dim()) {
    case 16:
      return score_batch_impl<16>(store, sf, head, relation, tails, out);
    case 32:
      return score_batch_impl<32>(store, sf, head, relation, tails, out);
    case 64:
      return score_batch_impl<64>(store, sf, head, relation, tails, out);
    default:
      return score_batch_impl<0>(store, sf, head, relation, tails, out);
  }
}

std::vector<double> score_batch_tails(const EmbeddingStore& store, const CompiledSf& sf,
                                      EntityId head, RelationId relation,
                                      std::span<const EntityId> tails) {
  std::vector<double> out(tails.size());
  score_batch_tails(store, sf, head, relation, tails, out);
  return out;
}

// ---------------------------------------------------------------------------

SparseGradient::SparseGradient(std::uint32_t entity_count, std::uint32_t relation_count,
                               std::uint32_t dim)
    : dim_(dim),
      entities_(static_cast<std::size_t>(entity_count) * 2 * dim, 0.0),
      relations_(static_cast<std::size_t>(relation_count) * 3 * dim, 0.0),
      entity_touched_(entity_count, 0),
      relation_touched_(relation_count, 0) {}

std::span<double> SparseGradient::entity_row(EntityId e) {
  if (!entity_touched_[e]) {
    entity_touched_[e] = 1;
    touched_entities_.push_back(e);
  }
  return {entities_.data() + static_cast<std::size_t>(e) * 2 * dim_, 2 * std::size_t{dim_}};
}

std::span<double> SparseGradient::relation_row(RelationId r) {
  if (!relation_touched_[r]) {
    relation_touched_[r] = 1;
    touched_relations_.push_back(r);
  }
  return {relations_.data() + static_cast<std::size_t>(r) * 3 * dim_, 3 * std::size_t{dim_}};
}

void SparseGradient::clear() {
  for (EntityId e : touched_entities_) {
    std::fill_n(entities_.begin() + static_cast<std::ptrdiff_t>(e) * 2 * dim_, 2 * dim_, 0.0);
    entity_touched_[e] = 0;
  }
  for (RelationId r : touched_relations_) {
    std::fill_n(relations_.begin() + static_cast<std::ptrdiff_t>(r) * 3 * dim_, 3 * dim_, 0.0);
    relation_touched_[r] = 0;
  }
  touched_entities_.clear();
  touched_relations_.clear();
}

Dropout::Dropout(double rate, std::uint64_t seed)
    : rate_(rate),
      keep_scale_(rate > 0.0 ? 1.0 / (1.0 - rate) : 1.0),
      threshold_(static_cast<std::uint32_t>(std::llround(rate * 65536.0))),
      state_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
}

void Dropout::sample(std::span<double> factors) {
  // Each counter hash yields four 16-bit uniforms, low bits first; an
  // element is dropped when its uniform falls below round(rate * 2^16).
  constexpr std::size_t kChunk = 16;
  std::uint64_t hashes[kChunk];
  std::uint16_t uniforms[4 * kChunk];
  const double scale = keep_scale_;
  const std::uint32_t threshold = threshold_;
  for (std::size_t base = 0; base < factors.size(); base += 4 * kChunk) {
    const std::size_t n = std::min(4 * kChunk, factors.size() - base);
    const std::size_t nh = (n + 3) / 4;
    for (std::size_t k = 0; k < nh; ++k) {
      state_ += 0x9e3779b97f4a7c15ULL;
      hashes[k] = mix64(state_);
    }
    for (std::size_t k = 0; k < nh; ++k) {
      for (std::size_t q = 0; q < 4; ++q) {
        uniforms[4 * k + q] = static_cast<std::uint16_t>(hashes[k] >> (16 * q));
      }
    }
    double* out = factors.data() + base;
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = uniforms[j] < threshold ? 0.0 : scale;
    }
  }
}

namespace {

// Returns softplus(x) and stores sigmoid(x), sharing one exp().
double softplus_sigmoid(double x, double& sig) {
  const double e = std::exp(-std::abs(x));
  sig = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  return std::max(x, 0.0) + std::log1p(e);
}

constexpr std::array<Part, 5> kContextParts{Part::kE0H, Part::kE1H, Part::kR0, Part::kR1,
                                            Part::kR2};

// Head and relation vectors gathered once for every candidate sharing the
// same (head, relation), with the partial sum of the tail-free terms.
struct Context {
  EntityId head = 0;
  RelationId relation = 0;
  double* values = nullptr;   // 5 x d
  double* factors = nullptr;  // 5 x d, null without dropout
  double* grads = nullptr;    // 5 x d
  double* partial = nullptr;  // d
  double* delta = nullptr;    // d: sum of dL/dg over the candidates using it
};

struct Scratch {
  std::vector<double> context_mem;
  std::vector<Context> contexts;
  std::vector<std::uint32_t> candidate_context;
  std::vector<double> tail_values;   // m x 2 x d
  std::vector<double> tail_factors;  // m x 2 x d
  std::vector<double> tail_grads;    // 2 x d
  std::vector<double> g;             // m x d
  std::vector<double> distances;
  std::vector<double> dloss;
  std::vector<double> delta;
};

// Back-propagates delta = dL/dg through `ops` into per-part gradients.
template <std::size_t D>
void backprop_ops(std::span<const CompiledSf::Op> ops, const PartPointers& values,
                  const std::array<double*, kNumParts>& grads, const double* __restrict delta,
                  std::size_t dim) {
  const std::size_t d = Dim<D>::get(dim);
  for (const auto& op : ops) {
    const double c = op.coefficient;
    double* ga = grads[op.left];
    if (op.product) {
      double* gb = grads[op.right];
      const double* a = values[op.left];
      const double* b = values[op.right];
      if (ga == gb) {
        // Self-product: d(a*a)/da = 2a.
        #pragma GCC ivdep
        for (std::size_t j = 0; j < d; ++j) ga[j] += 2.0 * c * delta[j] * a[j];
      } else {
        #pragma GCC ivdep
        for (std::size_t j = 0; j < d; ++j) {
          const double cd = c * delta[j];
          ga[j] += cd * b[j];
          gb[j] += cd * a[j];
        }
      }
    } else {
      #pragma GCC ivdep
      for (std::size_t j = 0; j < d; ++j) ga[j] += c * delta[j];
    }
  }
}

template <std::size_t D>
double loss_and_grad_impl(const EmbeddingStore& store, const CompiledSf& sf,
                          const Triple& positive, std::span<const Triple> negatives,
                          const LossOptions& options, SparseGradient& grad, double grad_scale,
                          Dropout* dropout) {
  thread_local Scratch s;
  const std::size_t d = Dim<D>::get(store.dim());
  const std::size_t m = negatives.size() + 1;
  const bool masked = dropout != nullptr && dropout->rate() > 0.0;
  auto candidate = [&](std::size_t i) -> const Triple& {
    return i == 0 ? positive : negatives[i - 1];
  };

  // Contexts: one per distinct (head, relation), the positive's first.
  s.contexts.clear();
  s.candidate_context.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Triple& t = candidate(i);
    std::uint32_t c = 0;
    if (i > 0 && (t.head != positive.head || t.relation != positive.relation)) {
      c = static_cast<std::uint32_t>(s.contexts.size());
      for (std::uint32_t k = 1; k < s.contexts.size(); ++k) {
        if (s.contexts[k].head == t.head && s.contexts[k].relation == t.relation) {
          c = k;
          break;
        }
      }
    }
    if (c == s.contexts.size()) s.contexts.push_back({t.head, t.relation});
    s.candidate_context[i] = c;
  }
  const std::size_t ctx_stride = 18 * d;
  if (s.context_mem.size() < s.contexts.size() * ctx_stride) {
    s.context_mem.resize(s.contexts.size() * ctx_stride);
  }
  for (std::size_t c = 0; c < s.contexts.size(); ++c) {
    Context& ctx = s.contexts[c];
    double* base = s.context_mem.data() + c * ctx_stride;
    ctx.values = base;
    ctx.factors = masked ? base + 5 * d : nullptr;
    ctx.grads = base + 10 * d;
    ctx.partial = base + 15 * d;
    ctx.delta = base + 16 * d;
    std::fill(ctx.grads, ctx.grads + 5 * d, 0.0);
    std::fill(ctx.partial, ctx.partial + 2 * d, 0.0);
    PartPointers parts{};
    for (std::size_t k = 0; k < kContextParts.size(); ++k) {
      const Part p = kContextParts[k];
      double* dst = ctx.values + k * d;
      parts[part_index(p)] = dst;
      if (!sf.uses(p)) continue;
      const double* src = is_head_part(p)
                              ? store.entity_part(ctx.head, part_index(p))
                              : store.relation_part(ctx.relation, part_index(p) - 2);
      if (masked) {
        double* f = ctx.factors + k * d;
        dropout->sample({f, d});
        #pragma GCC ivdep
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] * f[j];
      } else {
        copy_vec<D>(src, dst, d);
      }
    }
    axpy_ops<D>(sf.fixed_ops(), parts, ctx.partial, d);
  }

  // Forward: tail vectors and f for every candidate.
  const bool tail_used = sf.uses_tail();
  s.tail_values.resize(m * 2 * d);
  if (masked) s.tail_factors.resize(m * 2 * d);
  s.g.resize(m * d);
  s.distances.resize(m);
  s.dloss.resize(m);
  const auto tail_ops = sf.tail_ops();
  constexpr std::size_t kAhead = 8;
  for (std::size_t i = 0; i < m; ++i) {
    if (i + kAhead < m) prefetch_row(store.entity_part(candidate(i + kAhead).tail, 0), 2 * d);
    const Triple& t = candidate(i);
    const Context& ctx = s.contexts[s.candidate_context[i]];
    double* tv = s.tail_values.data() + i * 2 * d;
    if (tail_used) {
      for (std::size_t k = 0; k < 2; ++k) {
        if (!sf.uses(k == 0 ? Part::kE0T : Part::kE1T)) continue;
        const double* src = store.entity_part(t.tail, k);
        if (masked) {
          double* f = s.tail_factors.data() + i * 2 * d + k * d;
          dropout->sample({f, d});
          #pragma GCC ivdep
          for (std::size_t j = 0; j < d; ++j) tv[k * d + j] = src[j] * f[j];
        } else {
          copy_vec<D>(src, tv + k * d, d);
        }
      }
    }
    PartPointers parts{ctx.values,         ctx.values + d, ctx.values + 2 * d,
                       ctx.values + 3 * d, ctx.values + 4 * d, tv,
                       tv + d};
    double* g = s.g.data() + i * d;
    copy_vec<D>(ctx.partial, g, d);
    axpy_ops<D>(tail_ops, parts, g, d);
    s.distances[i] = l1({g, d});
  }

  // Loss and dL/dd per candidate.
  const double gamma = options.margin;
  double sig = 0.0;
  double loss = softplus_sigmoid(s.distances[0] - gamma, sig);
  s.dloss[0] = sig;
  const auto weights =
      negative_weights(std::span<const double>(s.distances).subspan(1, m - 1), options);
  for (std::size_t i = 1; i < m; ++i) {
    loss += weights[i - 1] * softplus_sigmoid(gamma - s.distances[i], sig);
    s.dloss[i] = -weights[i - 1] * sig;
  }

  // Backward. dd/dg_j = sign(g_j) with sign(0) = 0.
  s.delta.resize(d);
  s.tail_grads.resize(2 * d);
  double* delta = s.delta.data();
  for (std::size_t i = 0; i < m; ++i) {
    if (tail_used && i + kAhead < m) {
      prefetch_row(std::as_const(grad).entity_row(candidate(i + kAhead).tail).data(), 2 * d);
    }
    const Triple& t = candidate(i);
    Context& ctx = s.contexts[s.candidate_context[i]];
    const double scale = grad_scale * s.dloss[i];
    const double* g = s.g.data() + i * d;
    #pragma GCC ivdep
    for (std::size_t j = 0; j < d; ++j) {
      delta[j] = scale * (static_cast<double>(g[j] > 0.0) - static_cast<double>(g[j] < 0.0));
      ctx.delta[j] += delta[j];
    }
    if (!tail_used) continue;
    const double* tv = s.tail_values.data() + i * 2 * d;
    double* tg = s.tail_grads.data();
    zero_vec<D>(tg, d);
    zero_vec<D>(tg + d, d);
    const PartPointers values{ctx.values,         ctx.values + d, ctx.values + 2 * d,
                              ctx.values + 3 * d, ctx.values + 4 * d, tv,
                              tv + d};
    const std::array<double*, kNumParts> grads{ctx.grads,         ctx.grads + d,
                                               ctx.grads + 2 * d, ctx.grads + 3 * d,
                                               ctx.grads + 4 * d, tg,
                                               tg + d};
    backprop_ops<D>(tail_ops, values, grads, delta, d);
    double* dst = grad.entity_row(t.tail).data();
    const double* tf = masked ? s.tail_factors.data() + i * 2 * d : nullptr;
    for (std::size_t k = 0; k < 2; ++k) {
      if (!sf.uses(k == 0 ? Part::kE0T : Part::kE1T)) continue;
      double* out = dst + k * d;
      const double* src = tg + k * d;
      if (tf != nullptr) {
        const double* f = tf + k * d;
        #pragma GCC ivdep
        for (std::size_t j = 0; j < d; ++j) out[j] += f[j] * src[j];
      } else {
        #pragma GCC ivdep
        for (std::size_t j = 0; j < d; ++j) out[j] += src[j];
      }
    }
  }

  // Tail-free terms see the summed delta of their context.
  for (Context& ctx : s.contexts) {
    const PartPointers values{ctx.values,         ctx.values + d, ctx.values + 2 * d,
                              ctx.values + 3 * d, ctx.values + 4 * d, nullptr,
                              nullptr};
    const std::array<double*, kNumParts> grads{ctx.grads,         ctx.grads + d,
                                               ctx.grads + 2 * d, ctx.grads + 3 * d,
                                               ctx.grads + 4 * d, nullptr,
                                               nullptr};
    backprop_ops<D>(sf.fixed_ops(), values, grads, ctx.delta, d);
    for (std::size_t k = 0; k < kContextParts.size(); ++k) {
      const Part p = kContextParts[k];
      if (!sf.uses(p)) continue;
      double* out = is_head_part(p)
                        ? grad.entity_row(ctx.head).data() + part_index(p) * d
                        : grad.relation_row(ctx.relation).data() + (part_index(p) - 2) * d;
      const double* src = ctx.grads + k * d;
      if (masked) {
        const double* f = ctx.factors + k * d;
        #pragma GCC ivdep
        for (std::size_t j = 0; j < d; ++j) out[j] += f[j] * src[j];
      } else {
        #pragma GCC ivdep
        for (std::size_t j = 0; j < d; ++j) out[j] += src[j];
      }
    }
  }
  return loss;
}

}  // namespace

std::vector<double> negative_weights(std::span<const double> distances,
                                     const LossOptions& options) {
  std::vector<double> w(distances.size());
  if (distances.empty()) return w;
  if (options.weighting == NegativeWeighting::kUniform) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(distances.size()));
    return w;
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double d : distances) max_logit = std::max(max_logit, -options.adversarial_temperature * d);
  double total = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    w[i] = std::exp(-options.adversarial_temperature * distances[i] - max_logit);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

double loss_and_grad(const EmbeddingStore& store, const CompiledSf& sf, const Triple& positive,
                     std::span<const Triple> negatives, const LossOptions& options,
                     SparseGradient& grad, double grad_scale, Dropout* dropout) {
  if (negatives.empty()) throw ConfigError("loss_and_grad needs at least one negative");
  check_triple(store, positive);
  for (const Triple& t : negatives) check_triple(store, t);
  switch (store.dim()) {
    case 16:
      return loss_and_grad_impl<16>(store, sf, positive, negatives, options, grad, grad_scale,
                                    dropout);
    case 32:
      return loss_and_grad_impl<32>(store, sf, positive, negatives, options, grad, grad_scale,
                                    dropout);
    case 64:
      return loss_and_grad_impl<64>(store, sf, positive, negatives, options, grad, grad_scale,
                                    dropout);
    default:
      return loss_and_grad_impl<0>(store, sf, positive, negatives, options, grad, grad_scale,
                                   dropout);
  }
}

// ---------------------------------------------------------------------------

void adam_update(std::span<double> params, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::uint64_t step, const AdamOptions& o) {
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(step));
  for (std::size_t j = 0; j < params.size(); ++j) {
    m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * grad[j];
    v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * grad[j] * grad[j];
    const double m_hat = m[j] / bc1;
    const double v_hat = v[j] / bc2;
    params[j] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
  }
}

AdamOptimizer::AdamOptimizer(const EmbeddingStore& like, AdamOptions options)
    : options_(options),
      entity_m_(like.entity_data().size(), 0.0),
      entity_v_(like.entity_data().size(), 0.0),
      relation_m_(like.relation_data().size(), 0.0),
      relation_v_(like.relation_data().size(), 0.0) {}

void AdamOptimizer::step(EmbeddingStore& store, const SparseGradient& grad) {
  ++step_;
  const std::size_t erow = 2 * std::size_t{store.dim()};
  const std::size_t rrow = 3 * std::size_t{store.dim()};
  for (EntityId e : grad.touched_entities()) {
    const std::size_t off = static_cast<std::size_t>(e) * erow;
    adam_update(store.entity_row(e), grad.entity_row(e), {entity_m_.data() + off, erow},
                {entity_v_.data() + off, erow}, step_, options_);
  }
  for (RelationId r : grad.touched_relations()) {
    const std::size_t off = static_cast<std::size_t>(r) * rrow;
    adam_update(store.relation_row(r), grad.relation_row(r), {relation_m_.data() + off, rrow},
                {relation_v_.data() + off, rrow}, step_, options_);
  }
}

// ---------------------------------------------------------------------------

void sample_negatives_into(std::uint32_t entity_count, const Triple& positive, Rng& rng,
                           std::span<Triple> out) {
  if (entity_count < 2) throw ConfigError("cannot sample negatives from a single-entity graph");
  for (Triple& t : out) {
    auto tail = static_cast<EntityId>(uniform_index(rng, entity_count - 1));
    if (tail >= positive.tail) ++tail;
    t = {positive.head, positive.relation, tail};
  }
}

std::vector<Triple> sample_negatives(const KnowledgeGraph& g, const Triple& positive,
                                     std::size_t n, Rng& rng) {
  if (!g.augmented()) {
    throw ConfigError("negative sampling corrupts tails only and needs an augmented graph");
  }
  std::vector<Triple> out(n);
  sample_negatives_into(g.entity_count(), positive, rng, out);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'K', 'G', 'B', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw ParseError("checkpoint truncated", pos);
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return static_cast<T>(u);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EmbeddingStore& store,
                     const ScoringFunction& sf, std::uint64_t seed) {
  const std::string spec = print_sf(sf);
  std::string buf(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(buf, kCheckpointVersion);
  put_le<std::uint32_t>(buf, store.dim());
  put_le<std::uint32_t>(buf, store.entity_count());
  put_le<std::uint32_t>(buf, store.relation_count());
  put_le<std::uint64_t>(buf, seed);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(spec.size()));
  buf += spec;
  buf.reserve(buf.size() + 4 * (store.entity_data().size() + store.relation_data().size()));
  for (const auto* data : {&store.entity_data(), &store.relation_data()}) {
    for (double v : *data) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": not a kgbias checkpoint", 0);
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(buf, pos);
  if (version != kCheckpointVersion) {
    throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto dim = get_le<std::uint32_t>(buf, pos);
  const auto entities = get_le<std::uint32_t>(buf, pos);
  const auto relations = get_le<std::uint32_t>(buf, pos);
  const auto seed = get_le<std::uint64_t>(buf, pos);
  const auto spec_len = get_le<std::uint32_t>(buf, pos);
  if (pos + spec_len > buf.size()) throw ParseError("checkpoint truncated", pos);
  std::string spec = buf.substr(pos, spec_len);
  pos += spec_len;
  EmbeddingStore store(entities, relations, dim);
  for (auto* data : {&store.entity_data(), &store.relation_data()}) {
    for (double& v : *data) v = std::bit_cast<float>(get_le<std::uint32_t>(buf, pos));
  }
  if (pos != buf.size()) throw ParseError("trailing bytes in checkpoint", pos);
  return {std::move(store), std::move(spec), seed};
}

}  // namespace kgbias
