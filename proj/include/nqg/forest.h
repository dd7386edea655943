#ifndef NQG_FOREST_H
#define NQG_FOREST_H

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nqg/grammar.h"

namespace nqg {

// Packed chart of derivations. Nodes are anchored items (span over the
// source, plus an interned target fragment for constrained forests);
// hyperedges record the rule and the child items, one per source
// nonterminal in link order. Children always cover strictly smaller spans
// (no unary source rules), so the node array is topologically ordered:
// children precede parents.
struct ForestEdge {
  std::int32_t rule = -1;
  std::array<std::int32_t, 2> child{-1, -1};
  std::int32_t arity = 0;
};

struct ForestNode {
  std::int32_t begin = 0;
  std::int32_t end = 0;
  std::int32_t frag = -1;  // fragment id; -1 for unconstrained forests
  std::vector<ForestEdge> edges;
};

struct ParseForest {
  std::vector<ForestNode> nodes;
  std::vector<std::int32_t> roots;
  std::int32_t source_len = 0;
  std::vector<std::vector<Token>> fragments;  // constrained forests only

  bool parseable() const { return !roots.empty(); }
  // Number of derivations, saturating at `cap`.
  std::size_t count_derivations(std::size_t cap = std::numeric_limits<std::size_t>::max()) const;
};

// One derivation: a tree of rule applications, children in link order.
struct Derivation {
  std::int32_t rule = -1;
  std::vector<Derivation> children;

  friend bool operator==(const Derivation& a, const Derivation& b) {
    return a.rule == b.rule && a.children == b.children;
  }
  friend bool operator<(const Derivation& a, const Derivation& b);
};

std::vector<Derivation> unpack_derivations(const ParseForest& forest, std::size_t cap,
                                           bool* truncated = nullptr);
std::vector<Token> derivation_source_yield(const Derivation& d, const Grammar& g);
std::vector<Token> derivation_target_yield(const Derivation& d, const Grammar& g);
std::string derivation_str(const Derivation& d, const Grammar& g);

// Anchored rule applications (rule, begin, end) of a derivation when the
// root is anchored at [begin, end). Spans are recovered from the source
// yields of the children.
struct AnchoredRule {
  std::int32_t rule;
  std::int32_t begin;
  std::int32_t end;
};
std::vector<AnchoredRule> anchored_applications(const Derivation& d, const Grammar& g,
                                                std::int32_t begin = 0);

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Inside pass in the log semiring. `score(rule, begin, end)` gives the
// anchored rule score; returns per-node inside values.
template <typename ScoreFn>
std::vector<double> forest_inside(const ParseForest& f, ScoreFn&& score) {
  std::vector<double> inside(f.nodes.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t v = 0; v < f.nodes.size(); ++v) {
    const ForestNode& node = f.nodes[v];
    double total = -std::numeric_limits<double>::infinity();
    for (const ForestEdge& e : node.edges) {
      double s = score(e.rule, node.begin, node.end);
      for (int c = 0; c < e.arity; ++c) s += inside[e.child[c]];
      total = log_add_exp(total, s);
    }
    inside[v] = total;
  }
  return inside;
}

template <typename ScoreFn>
double forest_log_partition(const ParseForest& f, ScoreFn&& score) {
  const auto inside = forest_inside(f, score);
  double z = -std::numeric_limits<double>::infinity();
  for (std::int32_t r : f.roots) z = log_add_exp(z, inside[r]);
  return z;
}

// Max-derivation pass. Returns the best score per node; `back` (optional)
// receives the argmax edge index per node.
template <typename ScoreFn>
std::vector<double> forest_viterbi(const ParseForest& f, ScoreFn&& score,
                                   std::vector<std::int32_t>* back = nullptr) {
  std::vector<double> best(f.nodes.size(), -std::numeric_limits<double>::infinity());
  if (back) back->assign(f.nodes.size(), -1);
  for (std::size_t v = 0; v < f.nodes.size(); ++v) {
    const ForestNode& node = f.nodes[v];
    for (std::size_t ei = 0; ei < node.edges.size(); ++ei) {
      const ForestEdge& e = node.edges[ei];
      double s = score(e.rule, node.begin, node.end);
      for (int c = 0; c < e.arity; ++c) s += best[e.child[c]];
      if (s > best[v]) {
        best[v] = s;
        if (back) (*back)[v] = static_cast<std::int32_t>(ei);
      }
    }
  }
  return best;
}

Derivation extract_derivation(const ParseForest& f, std::int32_t node,
                              const std::vector<std::int32_t>& back);

// Posterior edge marginals under the log-linear model defined by `score`.
// Returns log Z; `edge_post[v][e]` receives the posterior probability of
// edge e of node v, flattened in node order.
template <typename ScoreFn>
double forest_edge_posteriors(const ParseForest& f, ScoreFn&& score,
                              std::vector<std::vector<double>>& edge_post) {
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> inside = forest_inside(f, score);
  double z = ninf;
  for (std::int32_t r : f.roots) z = log_add_exp(z, inside[r]);
  std::vector<double> outside(f.nodes.size(), ninf);
  for (std::int32_t r : f.roots) outside[r] = 0.0;
  edge_post.assign(f.nodes.size(), {});
  for (std::size_t vi = f.nodes.size(); vi-- > 0;) {
    const ForestNode& node = f.nodes[vi];
    edge_post[vi].assign(node.edges.size(), 0.0);
    if (outside[vi] == ninf) continue;
    for (std::size_t ei = 0; ei < node.edges.size(); ++ei) {
      const ForestEdge& e = node.edges[ei];
      double s = score(e.rule, node.begin, node.end);
      double full = outside[vi] + s;
      for (int c = 0; c < e.arity; ++c) full += inside[e.child[c]];
      edge_post[vi][ei] = std::exp(full - z);
      for (int c = 0; c < e.arity; ++c) {
        const double rest = full - inside[e.child[c]];
        outside[e.child[c]] = log_add_exp(outside[e.child[c]], rest);
      }
    }
  }
  return z;
}

}  // namespace nqg

#endif
