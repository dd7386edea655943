#include "nqg/rule.h"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace nqg {

namespace {

// First-occurrence-in-source renumbering shared by pairs and rules. Links
// are few, so a flat list beats a map.
struct IndexMap {
  std::vector<std::pair<int, int>> entries;

  int lookup(int from) const {
    for (const auto& [f, t] : entries)
      if (f == from) return t;
    return 0;
  }
};

IndexMap index_map_for(const SymbolSeq& source) {
  IndexMap remap;
  for (Symbol s : source) {
    if (!s.is_nonterminal()) continue;
    if (remap.lookup(s.index()) == 0)
      remap.entries.emplace_back(s.index(), static_cast<int>(remap.entries.size()) + 1);
  }
  return remap;
}

SymbolSeq remap_seq(const SymbolSeq& seq, const IndexMap& remap) {
  SymbolSeq out;
  out.reserve(seq.size());
  for (Symbol s : seq) {
    if (s.is_nonterminal()) {
      const int to = remap.lookup(s.index());
      if (to == 0)
        throw std::invalid_argument("target nonterminal NT_" + std::to_string(s.index()) +
                                    " does not appear in the source");
      out.push_back(Symbol::nonterminal(to));
    } else {
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace

Rule Rule::create(SymbolSeq source, SymbolSeq target, const RuleLimits& limits) {
  if (source.empty()) throw std::invalid_argument("rule source must be non-empty");
  if (target.empty() && !limits.allow_empty_target)
    throw std::invalid_argument("rule target must be non-empty");
  if (source.size() == 1 && source[0].is_nonterminal())
    throw std::invalid_argument("unary source rules are not allowed");

  std::vector<std::pair<int, int>> counts;  // (index, occurrences)
  auto count_of = [](std::vector<std::pair<int, int>>& v, int idx) -> int& {
    for (auto& [i, n] : v)
      if (i == idx) return n;
    v.emplace_back(idx, 0);
    return v.back().second;
  };
  for (Symbol s : source)
    if (s.is_nonterminal()) ++count_of(counts, s.index());
  if (static_cast<int>(counts.size()) > limits.max_source_nts)
    throw std::invalid_argument("source contains more than " +
                                std::to_string(limits.max_source_nts) + " nonterminals");
  for (const auto& [idx, n] : counts)
    if (n != 1)
      throw std::invalid_argument("nonterminal NT_" + std::to_string(idx) +
                                  " must appear exactly once in the source");

  std::vector<std::pair<int, int>> target_counts;
  for (Symbol s : target) {
    if (s.is_nonterminal()) {
      bool known = false;
      for (const auto& [idx, n] : counts) known |= idx == s.index();
      if (!known)
        throw std::invalid_argument("target nonterminal NT_" + std::to_string(s.index()) +
                                    " does not appear in the source");
      if (++count_of(target_counts, s.index()) > limits.max_target_nt_repeat)
        throw std::invalid_argument("target repeats NT_" + std::to_string(s.index()) +
                                    " more than " + std::to_string(limits.max_target_nt_repeat) +
                                    " times");
    } else if (is_reserved_token_text(s.text())) {
      throw std::invalid_argument("'" + s.text() + "' is reserved and cannot be a terminal");
    }
  }
  for (Symbol s : source)
    if (s.is_terminal() && is_reserved_token_text(s.text()))
      throw std::invalid_argument("'" + s.text() + "' is reserved and cannot be a terminal");

  const auto remap = index_map_for(source);
  Rule rule;
  rule.source_ = remap_seq(source, remap);
  rule.target_ = remap_seq(target, remap);
  rule.arity_ = static_cast<int>(remap.entries.size());
  return rule;
}

Rule Rule::parse(std::string_view line, const RuleLimits& limits) {
  const auto sep = line.find("###");
  if (sep == std::string_view::npos)
    throw std::invalid_argument("rule line is missing the '###' separator");
  if (line.find("###", sep + 3) != std::string_view::npos)
    throw std::invalid_argument("rule line contains more than one '###' separator");
  SymbolSeq src;
  {
    // parse_symbols rejects '###', so slice around the separator first.
    src = parse_symbols(line.substr(0, sep));
  }
  SymbolSeq tgt = parse_symbols(line.substr(sep + 3));
  return create(std::move(src), std::move(tgt), limits);
}

std::size_t Rule::nonterminal_occurrences() const {
  std::size_t n = 0;
  for (Symbol s : source_) n += s.is_nonterminal();
  for (Symbol s : target_) n += s.is_nonterminal();
  return n;
}

std::size_t Rule::terminal_occurrences() const {
  return symbol_count() - nonterminal_occurrences();
}

std::string Rule::str() const {
  return format_symbols(source_) + " ### " + format_symbols(target_);
}

std::size_t RuleHash::operator()(const Rule& r) const noexcept {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&h](std::int32_t v) {
    h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(v));
    h *= 1099511628211ull;
  };
  for (Symbol s : r.source()) mix(s.raw());
  mix(-1000000);  // separator
  for (Symbol s : r.target()) mix(s.raw());
  return h;
}

SymbolPair canonicalize_pair(SymbolPair pair) {
  const auto remap = index_map_for(pair.source);
  pair.source = remap_seq(pair.source, remap);
  pair.target = remap_seq(pair.target, remap);
  return pair;
}

SymbolPair apply_rule(const SymbolPair& pair, int link, const Rule& rule) {
  bool found = false;
  for (Symbol s : pair.source)
    if (s.is_nonterminal() && s.index() == link) found = true;
  if (!found)
    throw NoSuchNonterminal("no nonterminal with link " + std::to_string(link) +
                            " in the source");

  // Shift the rule's own links out of the pair's index range.
  int max_index = 0;
  for (Symbol s : pair.source)
    if (s.is_nonterminal()) max_index = std::max(max_index, s.index());
  const int shift = max_index;

  auto shifted = [&](Symbol s) {
    return s.is_nonterminal() ? Symbol::nonterminal(s.index() + shift) : s;
  };

  SymbolPair out;
  for (Symbol s : pair.source) {
    if (s.is_nonterminal() && s.index() == link) {
      for (Symbol r : rule.source()) out.source.push_back(shifted(r));
    } else {
      out.source.push_back(s);
    }
  }
  for (Symbol s : pair.target) {
    if (s.is_nonterminal() && s.index() == link) {
      for (Symbol r : rule.target()) out.target.push_back(shifted(r));
    } else {
      out.target.push_back(s);
    }
  }
  return canonicalize_pair(std::move(out));
}

}  // namespace nqg
