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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgbias {

// The seven embedding parts a scoring function may reference. Entities carry
// two parts (e0, e1), relations three (r0, r1, r2).
enum class Part : std::uint8_t { kE0H, kE1H, kR0, kR1, kR2, kE0T, kE1T };

inline constexpr std::size_t kNumParts = 7;
inline constexpr std::array<Part, kNumParts> kAllParts{Part::kE0H, Part::kE1H, Part::kR0,
                                                       Part::kR1,  Part::kR2,  Part::kE0T,
                                                       Part::kE1T};

std::string_view part_token(Part p);
constexpr std::size_t part_index(Part p) { return static_cast<std::size_t>(p); }
constexpr bool is_head_part(Part p) { return p == Part::kE0H || p == Part::kE1H; }
constexpr bool is_tail_part(Part p) { return p == Part::kE0T || p == Part::kE1T; }
constexpr bool is_relation_part(Part p) {
  return p == Part::kR0 || p == Part::kR1 || p == Part::kR2;
}

// A first-order term (one part) or a second-order Hadamard product of two
// parts. Operands are stored as given; equality treats a*b and b*a as the
// same term.
class Term {
 public:
  static Term first(Part p) { return Term(p, std::nullopt); }
  static Term product(Part a, Part b) { return Term(a, b); }

  bool second_order() const noexcept { return right_.has_value(); }
  Part left() const noexcept { return left_; }
  // Equals left() for first-order terms.
  Part right() const noexcept { return right_.value_or(left_); }

  // Position of this term's canonical form in enumerate_terms(): first-order
  // terms occupy [0, 7), the product a*b with a <= b sits at 7 + 7a + b.
  std::size_t canonical_index() const noexcept;

  bool references(Part p) const noexcept { return left_ == p || (right_ && *right_ == p); }

  friend bool operator==(const Term& a, const Term& b) noexcept {
    return a.canonical_index() == b.canonical_index();
  }

 private:
  Term(Part left, std::optional<Part> right) : left_(left), right_(right) {}

  Part left_;
  std::optional<Part> right_;
};

struct SignedTerm {
  int coefficient = 1;  // +1 or -1; absent terms have coefficient 0
  Term term;

  friend bool operator==(const SignedTerm&, const SignedTerm&) = default;
};

// f(.) as a signed sum of distinct terms; the score is -||f||_1.
class ScoringFunction {
 public:
  // Throws ParseError (position 0) when `terms` is empty, a coefficient is
  // not +-1, or two entries share a term.
  explicit ScoringFunction(std::vector<SignedTerm> terms);

  const std::vector<SignedTerm>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }

  // Terms sorted by canonical_index(), the order used for printing and for
  // evaluation.
  std::vector<SignedTerm> canonical_terms() const;

  bool uses(Part p) const noexcept;

  // Structural equality: same set of (coefficient, term) pairs.
  friend bool operator==(const ScoringFunction& a, const ScoringFunction& b);

 private:
  std::vector<SignedTerm> terms_;
};

// All 56 terms: the 7 first-order terms in Part order, then the 49 ordered
// products (a, b) in row-major Part order, self-products included.
const std::vector<Term>& enumerate_terms();

// Terms left after identifying a*b with b*a: 7 + 7 * 8 / 2.
inline constexpr std::size_t kNumDistinctTerms = 35;

// Grammar: [sign] term {sign term}, term := factor ['*' factor],
// factor := e0h|e1h|r0|r1|r2|e0t|e1t, sign := '+'|'-'. Whitespace is
// ignored. Errors carry the character offset.
ScoringFunction parse_sf(std::string_view text);

// Canonical text: terms in enumerate_terms() order with explicit signs,
// product operands in Part order, e.g. "+e0h -e0t +r0".
std::string print_sf(const ScoringFunction& sf);

// Named models expressible in the search space.
ScoringFunction catalog(std::string_view name);
const std::vector<std::string>& catalog_names();

// Accepts a catalog name or a grammar string.
ScoringFunction resolve_sf(std::string_view name_or_text);

bool uses_head(const ScoringFunction& sf);

}  // namespace kgbias
