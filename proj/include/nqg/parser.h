#ifndef NQG_PARSER_H
#define NQG_PARSER_H

#include <span>
#include <vector>

#include "nqg/forest.h"
#include "nqg/grammar.h"

namespace nqg {

// CKY-style chart parsing without binarization. Source rules have at most
// two nonterminals and no unary productions, so every chart item covers a
// strictly larger span than its children and construction over spans
// terminates in polynomial time for a fixed grammar.

// All derivations of `source` from <NT, NT>, any target. An unparseable
// source yields a forest with no roots. Rule ids in edges index into the
// rule span as given (for a Grammar, its rule ids).
ParseForest parse_source(std::span<const Rule> rules, std::span<const Token> source);
ParseForest parse_source(const Grammar& g, std::span<const Token> source);

// Derivations constrained to yield exactly `target`. Items additionally
// carry the interned target fragment they produce; the fragment of every
// item is a contiguous substring of the target.
ParseForest parse_constrained(std::span<const Rule> rules, std::span<const Token> source,
                              std::span<const Token> target);
ParseForest parse_constrained(const Grammar& g, std::span<const Token> source,
                              std::span<const Token> target);

bool can_derive(std::span<const Rule> rules, std::span<const Token> source,
                std::span<const Token> target);
bool can_derive(const Grammar& g, std::span<const Token> source, std::span<const Token> target);

// Unique targets derivable for `source`, truncated at `limit`. `exact` is
// false when any intermediate target set hit the cap, in which case the
// result is a lower bound on the true set.
struct TargetEnumeration {
  std::vector<std::vector<Token>> targets;
  bool exact = true;
};
TargetEnumeration enumerate_targets(std::span<const Rule> rules, std::span<const Token> source,
                                    std::size_t limit);
TargetEnumeration enumerate_targets(const Grammar& g, std::span<const Token> source,
                                    std::size_t limit);

}  // namespace nqg

#endif
