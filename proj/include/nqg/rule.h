#ifndef NQG_RULE_H
#define NQG_RULE_H

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nqg/symbol.h"

namespace nqg {

// Construction-time limits. Every rule in the system passes through
// Rule::create, so the grammar-wide invariants (at most 2 source
// nonterminals, no unary source, linked target indices) hold everywhere.
struct RuleLimits {
  int max_source_nts = 2;
  int max_target_nt_repeat = 4;
  bool allow_empty_target = false;
};

// A synchronized production NT -> <source, target>. Nonterminal links are
// canonical: indices are assigned by first occurrence in the source, left
// to right, so equal rules compare equal.
class Rule {
 public:
  Rule() = default;

  static Rule create(SymbolSeq source, SymbolSeq target, const RuleLimits& limits = {});
  static Rule parse(std::string_view line, const RuleLimits& limits = {});

  const SymbolSeq& source() const { return source_; }
  const SymbolSeq& target() const { return target_; }
  int arity() const { return arity_; }  // number of distinct nonterminal links
  std::size_t symbol_count() const { return source_.size() + target_.size(); }
  std::size_t nonterminal_occurrences() const;
  std::size_t terminal_occurrences() const;

  // "<source> ### <target>" with nonterminals written NT_1, NT_2.
  std::string str() const;

  friend bool operator==(const Rule& a, const Rule& b) {
    return a.source_ == b.source_ && a.target_ == b.target_;
  }
  friend bool operator!=(const Rule& a, const Rule& b) { return !(a == b); }

 private:
  SymbolSeq source_;
  SymbolSeq target_;
  int arity_ = 0;
};

struct RuleHash {
  std::size_t operator()(const Rule& r) const noexcept;
};

// A sentential form: a pair of symbol strings with linked nonterminals.
struct SymbolPair {
  SymbolSeq source;
  SymbolSeq target;

  friend bool operator==(const SymbolPair& a, const SymbolPair& b) {
    return a.source == b.source && a.target == b.target;
  }
};

// Renumbers links by first occurrence in the source, left to right.
// Idempotent; preserves the derived string pair set.
SymbolPair canonicalize_pair(SymbolPair pair);

// One step of the derives relation: substitutes the linked nonterminal
// `link` by the rule, on the source side once and at every target
// occurrence, then re-canonicalizes the remaining links. Throws
// NoSuchNonterminal if the link is absent from the pair's source.
SymbolPair apply_rule(const SymbolPair& pair, int link, const Rule& rule);

struct NoSuchNonterminal : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace nqg

template <>
struct std::hash<nqg::Rule> {
  std::size_t operator()(const nqg::Rule& r) const noexcept { return nqg::RuleHash()(r); }
};

#endif
