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
#include "kgbias/sf.hpp"

#include <algorithm>
#include <cctype>

#include "kgbias/error.hpp"
#include "kgbias/search_space.hpp"

namespace kgbias {

namespace {

constexpr std::array<std::string_view, kNumParts> kTokens{"e0h", "e1h", "r0", "r1",
                                                          "r2",  "e0t", "e1t"};

}  // namespace

std::string_view part_token(Part p) { return kTokens[part_index(p)]; }

std::size_t Term::canonical_index() const noexcept {
  if (!right_) return part_index(left_);
  const std::size_t a = std::min(part_index(left_), part_index(*right_));
  const std::size_t b = std::max(part_index(left_), part_index(*right_));
  return kNumParts + kNumParts * a + b;
}

ScoringFunction::ScoringFunction(std::vector<SignedTerm> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw ParseError("scoring function has no terms", 0);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].coefficient != 1 && terms_[i].coefficient != -1) {
      throw ParseError("coefficients must be +1 or -1", 0);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (terms_[j].term == terms_[i].term) throw ParseError("duplicate term in scoring function", 0);
    }
  }
}

std::vector<SignedTerm> ScoringFunction::canonical_terms() const {
  std::vector<SignedTerm> sorted = terms_;
  std::sort(sorted.begin(), sorted.end(), [](const SignedTerm& a, const SignedTerm& b) {
    return a.term.canonical_index() < b.term.canonical_index();
  });
  return sorted;
}

bool ScoringFunction::uses(Part p) const noexcept {
  return std::any_of(terms_.begin(), terms_.end(),
                     [p](const SignedTerm& st) { return st.term.references(p); });
}

bool operator==(const ScoringFunction& a, const ScoringFunction& b) {
  if (a.size() != b.size()) return false;
  return a.canonical_terms() == b.canonical_terms();
}

const std::vector<Term>& enumerate_terms() {
  static const std::vector<Term> terms = [] {
    std::vector<Term> out;
    out.reserve(kNumParts + kNumParts * kNumParts);
    for (Part p : kAllParts) out.push_back(Term::first(p));
    for (Part a : kAllParts) {
      for (Part b : kAllParts) out.push_back(Term::product(a, b));
    }
    return out;
  }();
  return terms;
}

boost::multiprecision::cpp_int search_space_size() {
  return boost::multiprecision::pow(boost::multiprecision::cpp_int(3),
                                    static_cast<unsigned>(enumerate_terms().size()));
}

boost::multiprecision::cpp_int distinct_search_space_size() {
  return boost::multiprecision::pow(boost::multiprecision::cpp_int(3),
                                    static_cast<unsigned>(kNumDistinctTerms));
}

namespace {

class SfParser {
 public:
  explicit SfParser(std::string_view text) : text_(text) {}

  ScoringFunction parse() {
    std::vector<SignedTerm> terms;
    std::vector<std::size_t> starts;
    skip_space();
    if (pos_ == text_.size()) throw ParseError("empty scoring function", pos_);
    bool first = true;
    while (true) {
      skip_space();
      if (pos_ == text_.size()) break;
      int sign = 1;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1 : 1;
        ++pos_;
        skip_space();
      } else if (!first) {
        throw ParseError("expected '+' or '-' at offset " + std::to_string(pos_), pos_);
      }
      const std::size_t start = pos_;
      const Part a = factor();
      skip_space();
      Term term = Term::first(a);
      if (pos_ < text_.size() && peek() == '*') {
        ++pos_;
        skip_space();
        term = Term::product(a, factor());
        skip_space();
        if (pos_ < text_.size() && peek() == '*') {
          throw ParseError("products of more than two factors are not allowed (offset " +
                               std::to_string(pos_) + ")",
                           pos_);
        }
      }
      for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].term == term) {
          throw ParseError("duplicate term at offset " + std::to_string(start) +
                               " (first seen at offset " + std::to_string(starts[i]) + ")",
                           start);
        }
      }
      terms.push_back({sign, term});
      starts.push_back(start);
      first = false;
    }
    return ScoringFunction(std::move(terms));
  }

 private:
  char peek() const { return text_[pos_]; }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Part factor() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string token(text_.substr(start, pos_ - start));
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (Part p : kAllParts) {
      if (token == part_token(p)) return p;
    }
    if (token.empty()) {
      const std::string found = start < text_.size() ? std::string(1, text_[start]) : "end of input";
      throw ParseError("expected a factor at offset " + std::to_string(start) + ", found '" +
                           found + "'",
                       start);
    }
    throw ParseError("unknown token '" + token + "' at offset " + std::to_string(start), start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string term_text(const Term& term) {
  if (!term.second_order()) return std::string(part_token(term.left()));
  Part a = term.left();
  Part b = term.right();
  if (part_index(b) < part_index(a)) std::swap(a, b);
  return std::string(part_token(a)) + "*" + std::string(part_token(b));
}

}  // namespace

ScoringFunction parse_sf(std::string_view text) { return SfParser(text).parse(); }

std::string print_sf(const ScoringFunction& sf) {
  std::string out;
  for (const SignedTerm& st : sf.canonical_terms()) {
    if (!out.empty()) out += ' ';
    out += st.coefficient > 0 ? '+' : '-';
    out += term_text(st.term);
  }
  return out;
}

namespace {

struct CatalogEntry {
  std::string_view name;
  std::string_view text;
};

constexpr std::array<CatalogEntry, 6> kCatalog{{
    {"transe", "e0h - e0t + r0"},
    {"interht", "e0h*e1t - e1h*e0t + r0"},
    {"triplere", "e0h*r1 - e0t*r2 + r0"},
    {"pairre", "e0h*r1 - e0t*r2"},
    {"trans", "e0h*e1t - e1h*e0t + r0 + e0h*r1 + e0t*r2"},
    {"autoweird", "-e1t*r2 + e0t*r0 + e0t*r2 - r0"},
}};

}  // namespace

ScoringFunction catalog(std::string_view name) {
  for (const auto& entry : kCatalog) {
    if (entry.name == name) return parse_sf(entry.text);
  }
  throw ConfigError("unknown scoring function '" + std::string(name) + "'");
}

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : kCatalog) out.emplace_back(entry.name);
    return out;
  }();
  return names;
}

ScoringFunction resolve_sf(std::string_view name_or_text) {
  for (const auto& entry : kCatalog) {
    if (entry.name == name_or_text) return parse_sf(entry.text);
  }
  return parse_sf(name_or_text);
}

bool uses_head(const ScoringFunction& sf) {
  return sf.uses(Part::kE0H) || sf.uses(Part::kE1H);
}

}  // namespace kgbias
