#include "nqg/forest.h"

#include <algorithm>
#include <stdexcept>

namespace nqg {

bool operator<(const Derivation& a, const Derivation& b) {
  if (a.rule != b.rule) return a.rule < b.rule;
  return a.children < b.children;
}

std::size_t ParseForest::count_derivations(std::size_t cap) const {
  std::vector<std::size_t> counts(nodes.size(), 0);
  auto sat_mul = [cap](std::size_t a, std::size_t b) {
    if (a == 0 || b == 0) return std::size_t{0};
    if (a > cap / b) return cap;
    return std::min(cap, a * b);
  };
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    std::size_t total = 0;
    for (const ForestEdge& e : nodes[v].edges) {
      std::size_t c = 1;
      for (int i = 0; i < e.arity; ++i) c = sat_mul(c, counts[e.child[i]]);
      total = std::min(cap, total + c);
    }
    counts[v] = total;
  }
  std::size_t total = 0;
  for (std::int32_t r : roots) total = std::min(cap, total + counts[r]);
  return total;
}

namespace {

void unpack_node(const ParseForest& f, std::int32_t v, std::size_t cap,
                 std::vector<std::vector<Derivation>>& memo, bool& truncated) {
  if (!memo[v].empty() || f.nodes[v].edges.empty()) return;
  std::vector<Derivation> out;
  for (const ForestEdge& e : f.nodes[v].edges) {
    if (out.size() >= cap) {
      truncated = true;
      break;
    }
    if (e.arity == 0) {
      out.push_back(Derivation{e.rule, {}});
    } else if (e.arity == 1) {
      for (const Derivation& c0 : memo[e.child[0]]) {
        if (out.size() >= cap) {
          truncated = true;
          break;
        }
        out.push_back(Derivation{e.rule, {c0}});
      }
    } else {
      for (const Derivation& c0 : memo[e.child[0]]) {
        for (const Derivation& c1 : memo[e.child[1]]) {
          if (out.size() >= cap) {
            truncated = true;
            break;
          }
          out.push_back(Derivation{e.rule, {c0, c1}});
        }
        if (out.size() >= cap) break;
      }
    }
  }
  memo[v] = std::move(out);
}

}  // namespace

std::vector<Derivation> unpack_derivations(const ParseForest& forest, std::size_t cap,
                                           bool* truncated) {
  bool trunc = false;
  std::vector<std::vector<Derivation>> memo(forest.nodes.size());
  for (std::size_t v = 0; v < forest.nodes.size(); ++v)
    unpack_node(forest, static_cast<std::int32_t>(v), cap, memo, trunc);
  std::vector<Derivation> out;
  for (std::int32_t r : forest.roots) {
    for (const Derivation& d : memo[r]) {
      if (out.size() >= cap) {
        trunc = true;
        break;
      }
      out.push_back(d);
    }
  }
  if (truncated) *truncated = trunc;
  return out;
}

std::vector<Token> derivation_source_yield(const Derivation& d, const Grammar& g) {
  const Rule& rule = g.rule(d.rule);
  if (static_cast<int>(d.children.size()) != rule.arity())
    throw std::invalid_argument("derivation arity mismatch for rule " + rule.str());
  std::vector<Token> out;
  for (Symbol s : rule.source()) {
    if (s.is_terminal()) {
      out.push_back(s.token());
    } else {
      const auto child = derivation_source_yield(d.children[s.index() - 1], g);
      out.insert(out.end(), child.begin(), child.end());
    }
  }
  return out;
}

std::vector<Token> derivation_target_yield(const Derivation& d, const Grammar& g) {
  const Rule& rule = g.rule(d.rule);
  if (static_cast<int>(d.children.size()) != rule.arity())
    throw std::invalid_argument("derivation arity mismatch for rule " + rule.str());
  std::vector<Token> out;
  for (Symbol s : rule.target()) {
    if (s.is_terminal()) {
      out.push_back(s.token());
    } else {
      // A repeated target link splices the same child's yield again.
      const auto child = derivation_target_yield(d.children[s.index() - 1], g);
      out.insert(out.end(), child.begin(), child.end());
    }
  }
  return out;
}

std::string derivation_str(const Derivation& d, const Grammar& g) {
  std::string out = "(" + g.rule(d.rule).str();
  for (const Derivation& c : d.children) out += " " + derivation_str(c, g);
  out += ")";
  return out;
}

namespace {

void anchored_rec(const Derivation& d, const Grammar& g, std::int32_t begin, std::int32_t end,
                  std::vector<AnchoredRule>& out) {
  out.push_back({d.rule, begin, end});
  const Rule& rule = g.rule(d.rule);
  std::int32_t pos = begin;
  for (Symbol s : rule.source()) {
    if (s.is_terminal()) {
      ++pos;
    } else {
      const auto len =
          static_cast<std::int32_t>(derivation_source_yield(d.children[s.index() - 1], g).size());
      anchored_rec(d.children[s.index() - 1], g, pos, pos + len, out);
      pos += len;
    }
  }
  if (pos != end) throw std::logic_error("derivation span bookkeeping out of sync");
}

}  // namespace

std::vector<AnchoredRule> anchored_applications(const Derivation& d, const Grammar& g,
                                                std::int32_t begin) {
  const auto yield = derivation_source_yield(d, g);
  std::vector<AnchoredRule> out;
  anchored_rec(d, g, begin, begin + static_cast<std::int32_t>(yield.size()), out);
  return out;
}

Derivation extract_derivation(const ParseForest& f, std::int32_t node,
                              const std::vector<std::int32_t>& back) {
  const std::int32_t ei = back[node];
  if (ei < 0) throw std::logic_error("no derivation recorded for forest node");
  const ForestEdge& e = f.nodes[node].edges[ei];
  Derivation d;
  d.rule = e.rule;
  for (int c = 0; c < e.arity; ++c) d.children.push_back(extract_derivation(f, e.child[c], back));
  return d;
}

}  // namespace nqg
