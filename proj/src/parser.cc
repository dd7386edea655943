#include "nqg/parser.h"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace nqg {

namespace {

// Match plan for one rule source: the terminal runs around the
// nonterminal slots (prefix, infix, suffix). Children are stored in link
// order, which after canonicalization is their left-to-right order.
struct RulePlan {
  std::int32_t rule = -1;
  std::vector<Token> pre, mid, suf;
  int arity = 0;
  std::size_t min_len = 0;
};

// Only rules whose source terminals all occur in the input can take part
// in any derivation of it, so the others are dropped up front.
std::vector<RulePlan> make_plans(std::span<const Rule> rules, std::span<const Token> source) {
  std::unordered_set<Token> present(source.begin(), source.end());
  std::vector<RulePlan> plans;
  plans.reserve(rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r) {
    RulePlan p;
    p.rule = static_cast<std::int32_t>(r);
    p.arity = rules[r].arity();
    int seen = 0;
    bool usable = true;
    for (Symbol s : rules[r].source()) {
      if (s.is_nonterminal()) {
        ++seen;
        continue;
      }
      if (!present.count(s.token())) {
        usable = false;
        break;
      }
      if (seen == 0)
        p.pre.push_back(s.token());
      else if (seen == 1)
        p.mid.push_back(s.token());
      else
        p.suf.push_back(s.token());
    }
    if (!usable) continue;
    if (p.arity < 2) {
      // one or zero slots: everything after the slot is the suffix
      p.suf.insert(p.suf.begin(), p.mid.begin(), p.mid.end());
      p.mid.clear();
    }
    p.min_len = p.pre.size() + p.mid.size() + p.suf.size() + static_cast<std::size_t>(p.arity);
    if (p.min_len <= source.size()) plans.push_back(std::move(p));
  }
  return plans;
}

bool match_at(std::span<const Token> x, std::size_t pos, const std::vector<Token>& run) {
  for (std::size_t k = 0; k < run.size(); ++k)
    if (x[pos + k] != run[k]) return false;
  return true;
}

// Enumerates the ways `plan` covers span [i, j), reporting the child
// spans. Each nonterminal covers at least one token.
template <typename Emit>
void match_plan(const RulePlan& p, std::span<const Token> x, std::size_t i, std::size_t j,
                Emit&& emit) {
  const std::size_t len = j - i;
  if (len < p.min_len) return;
  if (p.arity == 0) {
    if (len == p.pre.size() && match_at(x, i, p.pre)) emit(0, 0, 0, 0);
    return;
  }
  if (!match_at(x, i, p.pre)) return;
  if (!match_at(x, j - p.suf.size(), p.suf)) return;
  const std::size_t a = i + p.pre.size();
  const std::size_t b = j - p.suf.size();
  if (p.arity == 1) {
    if (b > a) emit(a, 0, 0, b);
    return;
  }
  // two slots: choose the split point m, with the infix at [m, m+|mid|)
  for (std::size_t m = a + 1; m + p.mid.size() + 1 <= b; ++m) {
    if (!match_at(x, m, p.mid)) continue;
    emit(a, m, m + p.mid.size(), b);
  }
}

}  // namespace

ParseForest parse_source(std::span<const Rule> rules, std::span<const Token> source) {
  const std::size_t n = source.size();
  const auto plans = make_plans(rules, source);
  ParseForest forest;
  forest.source_len = static_cast<std::int32_t>(n);
  // node id per span, -1 when underivable
  std::vector<std::int32_t> node_at(n * (n + 1), -1);
  auto slot = [n](std::size_t i, std::size_t j) { return i * (n + 1) + j; };

  for (std::size_t len = 1; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      std::vector<ForestEdge> edges;
      for (const RulePlan& p : plans) {
        match_plan(p, source, i, j, [&](std::size_t a, std::size_t m, std::size_t m2,
                                        std::size_t b) {
          ForestEdge e;
          e.rule = p.rule;
          e.arity = p.arity;
          if (p.arity >= 1) {
            const std::int32_t c0 = node_at[slot(a, p.arity == 1 ? b : m)];
            if (c0 < 0) return;
            e.child[0] = c0;
          }
          if (p.arity == 2) {
            const std::int32_t c1 = node_at[slot(m2, b)];
            if (c1 < 0) return;
            e.child[1] = c1;
          }
          edges.push_back(e);
        });
      }
      if (!edges.empty()) {
        ForestNode node;
        node.begin = static_cast<std::int32_t>(i);
        node.end = static_cast<std::int32_t>(j);
        node.edges = std::move(edges);
        node_at[slot(i, j)] = static_cast<std::int32_t>(forest.nodes.size());
        forest.nodes.push_back(std::move(node));
      }
    }
  }
  if (n > 0 && node_at[slot(0, n)] >= 0) forest.roots.push_back(node_at[slot(0, n)]);
  return forest;
}

ParseForest parse_source(const Grammar& g, std::span<const Token> source) {
  return parse_source(std::span<const Rule>(g.rules()), source);
}

namespace {

// Interns contiguous substrings of the constrained target. Composition
// results that are not substrings of the target are rejected.
struct FragTable {
  std::span<const Token> y;
  std::map<std::vector<Token>, std::int32_t> ids;
  std::vector<std::vector<Token>> frags;

  bool is_substring(const std::vector<Token>& f) const {
    if (f.empty()) return true;
    if (f.size() > y.size()) return false;
    for (std::size_t i = 0; i + f.size() <= y.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < f.size(); ++k)
        if (y[i + k] != f[k]) {
          ok = false;
          break;
        }
      if (ok) return true;
    }
    return false;
  }

  // -1 when the fragment cannot occur in the target
  std::int32_t intern(std::vector<Token> f) {
    auto it = ids.find(f);
    if (it != ids.end()) return it->second;
    if (!is_substring(f)) return -1;
    const auto id = static_cast<std::int32_t>(frags.size());
    ids.emplace(f, id);
    frags.push_back(std::move(f));
    return id;
  }
};

// Substitutes child fragments into the rule target. Returns false when the
// composition already exceeds the constrained target's length.
bool compose_target(const Rule& rule, const FragTable& table, const std::int32_t* child_frag,
                    std::vector<Token>& out) {
  out.clear();
  for (Symbol s : rule.target()) {
    if (s.is_terminal()) {
      out.push_back(s.token());
    } else {
      const auto& f = table.frags[child_frag[s.index() - 1]];
      out.insert(out.end(), f.begin(), f.end());
    }
    if (out.size() > table.y.size()) return false;
  }
  return true;
}

}  // namespace

ParseForest parse_constrained(std::span<const Rule> rules, std::span<const Token> source,
                              std::span<const Token> target) {
  const std::size_t n = source.size();
  const auto plans = make_plans(rules, source);
  ParseForest forest;
  forest.source_len = static_cast<std::int32_t>(n);
  FragTable table{target, {}, {}};

  // items per span: fragment id -> node id
  std::vector<std::map<std::int32_t, std::int32_t>> items(n * (n + 1));
  auto slot = [n](std::size_t i, std::size_t j) { return i * (n + 1) + j; };

  std::vector<Token> composed;
  auto add_item = [&](std::size_t i, std::size_t j, std::int32_t frag, const ForestEdge& e) {
    auto& span_items = items[slot(i, j)];
    auto it = span_items.find(frag);
    std::int32_t id;
    if (it == span_items.end()) {
      id = static_cast<std::int32_t>(forest.nodes.size());
      ForestNode node;
      node.begin = static_cast<std::int32_t>(i);
      node.end = static_cast<std::int32_t>(j);
      node.frag = frag;
      forest.nodes.push_back(std::move(node));
      span_items.emplace(frag, id);
    } else {
      id = it->second;
    }
    forest.nodes[id].edges.push_back(e);
  };

  for (std::size_t len = 1; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      for (const RulePlan& p : plans) {
        const Rule& rule = rules[p.rule];
        match_plan(p, source, i, j, [&](std::size_t a, std::size_t m, std::size_t m2,
                                        std::size_t b) {
          std::int32_t child_frag[2] = {-1, -1};
          if (p.arity == 0) {
            if (!compose_target(rule, table, child_frag, composed)) return;
            const std::int32_t frag = table.intern(composed);
            if (frag < 0) return;
            add_item(i, j, frag, ForestEdge{p.rule, {-1, -1}, 0});
            return;
          }
          const auto& c0_items = items[slot(a, p.arity == 1 ? b : m)];
          if (p.arity == 1) {
            for (const auto& [f0, id0] : c0_items) {
              child_frag[0] = f0;
              if (!compose_target(rule, table, child_frag, composed)) continue;
              const std::int32_t frag = table.intern(composed);
              if (frag < 0) continue;
              add_item(i, j, frag, ForestEdge{p.rule, {id0, -1}, 1});
            }
            return;
          }
          const auto& c1_items = items[slot(m2, b)];
          for (const auto& [f0, id0] : c0_items) {
            for (const auto& [f1, id1] : c1_items) {
              child_frag[0] = f0;
              child_frag[1] = f1;
              if (!compose_target(rule, table, child_frag, composed)) continue;
              const std::int32_t frag = table.intern(composed);
              if (frag < 0) continue;
              add_item(i, j, frag, ForestEdge{p.rule, {id0, id1}, 2});
            }
          }
        });
      }
    }
  }

  forest.fragments = table.frags;
  if (n > 0) {
    std::vector<Token> whole(target.begin(), target.end());
    const auto& root_items = items[slot(0, n)];
    auto it = table.ids.find(whole);
    if (it != table.ids.end()) {
      auto rt = root_items.find(it->second);
      if (rt != root_items.end()) forest.roots.push_back(rt->second);
    }
  }
  return forest;
}

ParseForest parse_constrained(const Grammar& g, std::span<const Token> source,
                              std::span<const Token> target) {
  return parse_constrained(std::span<const Rule>(g.rules()), source, target);
}

bool can_derive(std::span<const Rule> rules, std::span<const Token> source,
                std::span<const Token> target) {
  return parse_constrained(rules, source, target).parseable();
}

bool can_derive(const Grammar& g, std::span<const Token> source, std::span<const Token> target) {
  return can_derive(std::span<const Rule>(g.rules()), source, target);
}

namespace {

// Hash-consed token sequences: per-item target sets hold small integer ids
// instead of repeatedly copied vectors.
struct YieldArena {
  std::vector<std::vector<Token>> yields;
  std::unordered_map<std::uint64_t, std::vector<std::int32_t>> buckets;

  static std::uint64_t hash(const std::vector<Token>& y) {
    std::uint64_t h = 14695981039346656037ull;
    for (Token t : y) {
      h ^= static_cast<std::uint32_t>(t);
      h *= 1099511628211ull;
    }
    return h;
  }

  std::int32_t intern(const std::vector<Token>& y) {
    auto& bucket = buckets[hash(y)];
    for (std::int32_t id : bucket)
      if (yields[id] == y) return id;
    const auto id = static_cast<std::int32_t>(yields.size());
    yields.push_back(y);
    bucket.push_back(id);
    return id;
  }
};

}  // namespace

TargetEnumeration enumerate_targets(std::span<const Rule> rules, std::span<const Token> source,
                                    std::size_t limit) {
  const ParseForest forest = parse_source(rules, source);
  TargetEnumeration result;
  if (!forest.parseable()) return result;

  // memoized per-item target sets with a hard cap; ids keep insertion
  // order so capped enumerations stay deterministic
  YieldArena arena;
  std::vector<std::vector<std::int32_t>> memo(forest.nodes.size());
  bool truncated = false;
  std::vector<Token> composed;
  std::unordered_set<std::int64_t> member;
  for (std::size_t v = 0; v < forest.nodes.size(); ++v) {
    auto& out = memo[v];
    member.clear();
    auto insert = [&](std::int32_t id) {
      if (member.insert(id).second) out.push_back(id);
    };
    for (const ForestEdge& e : forest.nodes[v].edges) {
      const Rule& rule = rules[e.rule];
      auto compose = [&](std::int32_t c0, std::int32_t c1) {
        if (out.size() >= limit) {
          truncated = true;
          return;
        }
        composed.clear();
        for (Symbol s : rule.target()) {
          if (s.is_terminal()) {
            composed.push_back(s.token());
          } else {
            const auto& y = arena.yields[s.index() == 1 ? c0 : c1];
            composed.insert(composed.end(), y.begin(), y.end());
          }
        }
        insert(arena.intern(composed));
      };
      if (e.arity == 0) {
        compose(-1, -1);
      } else if (e.arity == 1) {
        for (std::int32_t c0 : memo[e.child[0]]) {
          if (out.size() >= limit) {
            truncated = true;
            break;
          }
          compose(c0, -1);
        }
      } else {
        for (std::int32_t c0 : memo[e.child[0]]) {
          for (std::int32_t c1 : memo[e.child[1]]) {
            if (out.size() >= limit) {
              truncated = true;
              break;
            }
            compose(c0, c1);
          }
          if (out.size() >= limit) break;
        }
      }
    }
  }

  std::set<std::vector<Token>> root_set;
  for (std::int32_t r : forest.roots)
    for (std::int32_t id : memo[r]) {
      if (root_set.size() >= limit) {
        truncated = true;
        break;
      }
      root_set.insert(arena.yields[id]);
    }
  result.targets.assign(root_set.begin(), root_set.end());
  result.exact = !truncated;
  return result;
}

TargetEnumeration enumerate_targets(const Grammar& g, std::span<const Token> source,
                                    std::size_t limit) {
  return enumerate_targets(std::span<const Rule>(g.rules()), source, limit);
}

}  // namespace nqg
