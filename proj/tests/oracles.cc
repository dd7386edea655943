#include "oracles.h"

#include <algorithm>
#include <set>

namespace nqg::test {

namespace {

struct RuleShape {
  int arity = 0;
  std::size_t terminals = 0;
};

RuleShape shape_of(const Rule& r) {
  RuleShape s;
  s.arity = r.arity();
  for (Symbol sym : r.source())
    if (sym.is_terminal()) ++s.terminals;
  return s;
}

OracleItem compose(const Grammar& g, std::int32_t rule_id, const OracleItem* c1,
                   const OracleItem* c2) {
  const Rule& rule = g.rule(rule_id);
  OracleItem item;
  item.tree.rule = rule_id;
  if (c1) item.tree.children.push_back(c1->tree);
  if (c2) item.tree.children.push_back(c2->tree);
  for (Symbol s : rule.source()) {
    if (s.is_terminal()) {
      item.source.push_back(s.token());
    } else {
      const OracleItem* c = s.index() == 1 ? c1 : c2;
      item.source.insert(item.source.end(), c->source.begin(), c->source.end());
    }
  }
  for (Symbol s : rule.target()) {
    if (s.is_terminal()) {
      item.target.push_back(s.token());
    } else {
      const OracleItem* c = s.index() == 1 ? c1 : c2;
      item.target.insert(item.target.end(), c->target.begin(), c->target.end());
    }
  }
  return item;
}

}  // namespace

bool enumerate_all_derivations(const Grammar& g, std::size_t max_len, std::size_t cap,
                               std::vector<OracleItem>& out) {
  out.clear();
  std::vector<std::vector<OracleItem>> by_len(max_len + 1);
  std::vector<RuleShape> shapes;
  for (const Rule& r : g.rules()) shapes.push_back(shape_of(r));

  std::size_t total = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    for (std::size_t ri = 0; ri < g.size(); ++ri) {
      const RuleShape& s = shapes[ri];
      const auto id = static_cast<std::int32_t>(ri);
      if (s.arity == 0) {
        if (s.terminals == len) {
          by_len[len].push_back(compose(g, id, nullptr, nullptr));
          ++total;
        }
      } else if (s.arity == 1) {
        if (len <= s.terminals) continue;
        for (const OracleItem& c1 : by_len[len - s.terminals]) {
          by_len[len].push_back(compose(g, id, &c1, nullptr));
          if (++total > cap) return false;
        }
      } else {
        if (len < s.terminals + 2) continue;
        for (std::size_t l1 = 1; l1 + s.terminals + 1 <= len; ++l1) {
          const std::size_t l2 = len - s.terminals - l1;
          for (const OracleItem& c1 : by_len[l1])
            for (const OracleItem& c2 : by_len[l2]) {
              by_len[len].push_back(compose(g, id, &c1, &c2));
              if (++total > cap) return false;
            }
        }
      }
      if (total > cap) return false;
    }
  }
  for (auto& bucket : by_len)
    for (auto& item : bucket) out.push_back(std::move(item));
  return true;
}

std::vector<OracleItem> derivations_for_source(const std::vector<OracleItem>& all,
                                               const std::vector<Token>& source) {
  std::vector<OracleItem> out;
  for (const OracleItem& item : all)
    if (item.source == source) out.push_back(item);
  return out;
}

namespace {

std::size_t source_len(const Derivation& d, const Grammar& g) {
  const Rule& rule = g.rule(d.rule);
  std::size_t n = 0;
  for (Symbol s : rule.source()) {
    if (s.is_terminal())
      ++n;
    else
      n += source_len(d.children[s.index() - 1], g);
  }
  return n;
}

void anchors_rec(const Derivation& d, const Grammar& g, std::int32_t begin,
                 std::vector<AnchoredRule>& out) {
  const Rule& rule = g.rule(d.rule);
  std::int32_t end = begin;
  for (Symbol s : rule.source()) {
    if (s.is_terminal())
      ++end;
    else
      end += static_cast<std::int32_t>(source_len(d.children[s.index() - 1], g));
  }
  out.push_back({d.rule, begin, end});
  std::int32_t pos = begin;
  for (Symbol s : rule.source()) {
    if (s.is_terminal()) {
      ++pos;
    } else {
      anchors_rec(d.children[s.index() - 1], g, pos, out);
      pos += static_cast<std::int32_t>(source_len(d.children[s.index() - 1], g));
    }
  }
}

}  // namespace

std::vector<AnchoredRule> oracle_anchors(const Derivation& d, const Grammar& g) {
  std::vector<AnchoredRule> out;
  anchors_rec(d, g, 0, out);
  return out;
}

SymbolPair replay_derivation(const Derivation& d, const Grammar& g) {
  SymbolPair pair{{Symbol::nonterminal(1)}, {Symbol::nonterminal(1)}};
  pair = apply_rule(pair, 1, g.rule(d.rule));
  // children in link order: after each full substitution the next pending
  // child re-canonicalizes to link 1
  RuleLimits permissive;
  permissive.max_target_nt_repeat = 64;
  for (const Derivation& child : d.children) {
    const SymbolPair sub = replay_derivation(child, g);
    pair = apply_rule(pair, 1, Rule::create(sub.source, sub.target, permissive));
  }
  return pair;
}

Grammar random_grammar(std::mt19937_64& rng, int max_rules, bool allow_target_repeat) {
  const std::vector<std::string> src_alpha = {"a", "b", "c", "d"};
  const std::vector<std::string> tgt_alpha = {"A", "B", "C", "D"};
  auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  std::vector<Rule> rules;
  const int want = 1 + static_cast<int>(pick(static_cast<std::size_t>(max_rules)));
  int guard = 0;
  while (static_cast<int>(rules.size()) < want && ++guard < 200) {
    const int arity = static_cast<int>(pick(10)) < 4 ? 0 : (pick(2) == 0 ? 1 : 2);
    SymbolSeq src;
    if (arity == 0) {
      const std::size_t len = 1 + pick(3);
      for (std::size_t i = 0; i < len; ++i) src.push_back(Symbol::terminal(src_alpha[pick(4)]));
    } else if (arity == 1) {
      const std::size_t pre = pick(2), suf = pick(2);
      for (std::size_t i = 0; i < pre; ++i) src.push_back(Symbol::terminal(src_alpha[pick(4)]));
      src.push_back(Symbol::nonterminal(1));
      for (std::size_t i = 0; i < suf + (pre == 0 ? 1 : 0); ++i)
        src.push_back(Symbol::terminal(src_alpha[pick(4)]));
    } else {
      const std::size_t pre = pick(2), mid = pick(2), suf = pick(2);
      for (std::size_t i = 0; i < pre; ++i) src.push_back(Symbol::terminal(src_alpha[pick(4)]));
      src.push_back(Symbol::nonterminal(1));
      for (std::size_t i = 0; i < mid; ++i) src.push_back(Symbol::terminal(src_alpha[pick(4)]));
      src.push_back(Symbol::nonterminal(2));
      for (std::size_t i = 0; i < suf; ++i) src.push_back(Symbol::terminal(src_alpha[pick(4)]));
    }

    SymbolSeq tgt;
    const std::size_t tlen = 1 + pick(4);
    int used[3] = {0, 0, 0};
    for (std::size_t i = 0; i < tlen; ++i) {
      const bool emit_nt = arity > 0 && pick(3) == 0;
      if (emit_nt) {
        const int idx = 1 + static_cast<int>(pick(static_cast<std::size_t>(arity)));
        if (used[idx] >= (allow_target_repeat ? 3 : 1)) {
          tgt.push_back(Symbol::terminal(tgt_alpha[pick(4)]));
        } else {
          ++used[idx];
          tgt.push_back(Symbol::nonterminal(idx));
        }
      } else {
        tgt.push_back(Symbol::terminal(tgt_alpha[pick(4)]));
      }
    }

    try {
      rules.push_back(Rule::create(std::move(src), std::move(tgt)));
    } catch (const std::invalid_argument&) {
      continue;
    }
  }
  if (rules.empty()) rules.push_back(Rule::parse("a ### A"));
  return Grammar(std::move(rules));
}

std::vector<Token> random_source(std::mt19937_64& rng, const Grammar& g, std::size_t max_len) {
  std::set<Token> terminal_set;
  for (const Rule& r : g.rules())
    for (Symbol s : r.source())
      if (s.is_terminal()) terminal_set.insert(s.token());
  std::vector<Token> terminals(terminal_set.begin(), terminal_set.end());
  if (terminals.empty()) terminals.push_back(intern_token("a"));
  const std::size_t len = 1 + rng() % max_len;
  std::vector<Token> out;
  for (std::size_t i = 0; i < len; ++i)
    out.push_back(terminals[rng() % terminals.size()]);
  return out;
}

}  // namespace nqg::test
