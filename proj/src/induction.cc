#include "nqg/induction.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "nqg/parallel.h"

namespace nqg {

namespace {

double symbol_bits(const Rule& r, const InductionConfig& cfg) {
  return cfg.l_nt * static_cast<double>(r.nonterminal_occurrences()) +
         cfg.l_t * static_cast<double>(r.terminal_occurrences());
}

bool balanced_parens(std::span<const Symbol> seq) {
  static const Token open = intern_token("(");
  static const Token close = intern_token(")");
  int depth = 0;
  for (Symbol s : seq) {
    if (!s.is_terminal()) continue;
    if (s.token() == open) ++depth;
    if (s.token() == close && --depth < 0) return false;
  }
  return depth == 0;
}

// Maximal terminal runs of a rule source, in order.
std::vector<std::vector<Token>> source_segments(const Rule& r) {
  std::vector<std::vector<Token>> segs;
  std::vector<Token> cur;
  for (Symbol s : r.source()) {
    if (s.is_terminal()) {
      cur.push_back(s.token());
    } else if (!cur.empty()) {
      segs.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) segs.push_back(std::move(cur));
  return segs;
}

bool contains_run(std::span<const Token> hay, std::span<const Token> needle) {
  if (needle.empty()) return true;
  if (needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size(); ++k)
      if (hay[i + k] != needle[k]) {
        ok = false;
        break;
      }
    if (ok) return true;
  }
  return false;
}

bool rule_matches_source(const std::vector<std::vector<Token>>& segments,
                         std::span<const Token> source) {
  for (const auto& seg : segments)
    if (!contains_run(source, std::span<const Token>(seg))) return false;
  return true;
}

// Anchor terminals standing in for nonterminal link sites. Pre-interned so
// parallel phases never intern.
Token anchor_token(int index) {
  static const Token anchors[8] = {
      intern_token("\x01nt:1"), intern_token("\x01nt:2"), intern_token("\x01nt:3"),
      intern_token("\x01nt:4"), intern_token("\x01nt:5"), intern_token("\x01nt:6"),
      intern_token("\x01nt:7"), intern_token("\x01nt:8")};
  if (index < 1 || index > 8) throw std::out_of_range("anchor index out of range");
  return anchors[index - 1];
}

std::vector<Token> anchored_tokens(std::span<const Symbol> seq) {
  std::vector<Token> out;
  out.reserve(seq.size());
  for (Symbol s : seq)
    out.push_back(s.is_terminal() ? s.token() : anchor_token(s.index()));
  return out;
}

double log2_target_count(std::span<const Rule> rules, std::span<const Token> source,
                         std::size_t cap, bool* capped) {
  const TargetEnumeration e = enumerate_targets(rules, source, cap);
  if (capped && !e.exact) *capped = true;
  const std::size_t count = std::max<std::size_t>(1, e.targets.size());
  return std::log2(static_cast<double>(count));
}

std::uint64_t mix_seed(std::uint64_t seed, const std::string& key) {
  return fnv1a64(key) ^ (seed + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
}

}  // namespace

std::vector<Rule> initialize_rules(const Dataset& dataset, const InductionConfig& config) {
  const RuleLimits limits = config.rule_limits();
  std::vector<Rule> rules;
  std::unordered_set<Rule, RuleHash> seen;
  auto add = [&](Rule r) {
    if (seen.insert(r).second) rules.push_back(std::move(r));
  };

  for (const Example& ex : dataset.examples)
    add(Rule::create(to_symbols(ex.source), to_symbols(ex.target), limits));

  // Identity rules for maximal shared substrings: extend every matching
  // (source, target) position pair as far as it goes, keep runs that cannot
  // be extended to the left.
  for (const Example& ex : dataset.examples) {
    const auto& x = ex.source;
    const auto& y = ex.target;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < y.size(); ++j) {
        if (x[i] != y[j]) continue;
        if (i > 0 && j > 0 && x[i - 1] == y[j - 1]) continue;  // not leftmost
        std::size_t len = 0;
        while (i + len < x.size() && j + len < y.size() && x[i + len] == y[j + len]) ++len;
        SymbolSeq run;
        for (std::size_t k = 0; k < len; ++k) run.push_back(Symbol::terminal(x[i + k]));
        add(Rule::create(run, run, limits));
      }
    }
  }
  return rules;
}

std::vector<SplitPair> split_rule(const Rule& rule, const InductionConfig& config) {
  const RuleLimits limits = config.rule_limits();
  const SymbolSeq& src = rule.source();
  const SymbolSeq& tgt = rule.target();
  std::vector<SplitPair> out;
  std::set<std::pair<std::string, std::string>> seen;

  for (std::size_t a = 0; a < src.size(); ++a) {
    for (std::size_t b = a + 1; b <= src.size(); ++b) {
      if (a == 0 && b == src.size()) continue;  // outer source would be unary
      const SymbolSeq inner_src(src.begin() + a, src.begin() + b);

      for (std::size_t c = 0; c < tgt.size(); ++c) {
        for (std::size_t d = c + 1; d <= tgt.size(); ++d) {
          const SymbolSeq needle(tgt.begin() + c, tgt.begin() + d);
          if (!balanced_parens(needle)) continue;

          // occurrences of the needle in the target
          std::vector<std::size_t> occ;
          for (std::size_t p = 0; p + needle.size() <= tgt.size(); ++p)
            if (std::equal(needle.begin(), needle.end(), tgt.begin() + p)) occ.push_back(p);
          bool replace_all = false;
          if (occ.size() > 1) {
            if (!config.allow_repeated_target_nt) continue;
            bool disjoint = true;
            for (std::size_t k = 1; k < occ.size(); ++k)
              if (occ[k] < occ[k - 1] + needle.size()) disjoint = false;
            if (!disjoint) continue;  // overlapping repeats are ambiguous
            replace_all = true;
          }

          // The fresh link gets the next canonical index after the links
          // whose source position precedes the replacement.
          int fresh = 1;
          for (std::size_t p = 0; p < a; ++p)
            if (src[p].is_nonterminal()) ++fresh;
          const Symbol fresh_nt = Symbol::nonterminal(100 + fresh);

          SymbolSeq outer_src(src.begin(), src.begin() + a);
          outer_src.push_back(fresh_nt);
          outer_src.insert(outer_src.end(), src.begin() + b, src.end());

          SymbolSeq outer_tgt;
          if (replace_all) {
            std::size_t p = 0, k = 0;
            while (p < tgt.size()) {
              if (k < occ.size() && p == occ[k]) {
                outer_tgt.push_back(fresh_nt);
                p += needle.size();
                ++k;
              } else {
                outer_tgt.push_back(tgt[p++]);
              }
            }
          } else {
            outer_tgt.assign(tgt.begin(), tgt.begin() + c);
            outer_tgt.push_back(fresh_nt);
            outer_tgt.insert(outer_tgt.end(), tgt.begin() + d, tgt.end());
          }
          if (!balanced_parens(outer_tgt)) continue;

          try {
            SplitPair pair;
            pair.outer = Rule::create(std::move(outer_src), std::move(outer_tgt), limits);
            pair.inner = Rule::create(inner_src, needle, limits);
            pair.link = fresh;
            if (seen.emplace(pair.outer.str(), pair.inner.str()).second)
              out.push_back(std::move(pair));
          } catch (const std::invalid_argument&) {
            // dangling links, repeat bound, or unary source: not a valid split
          }
        }
      }
    }
  }
  return out;
}

bool rule_derivable(std::span<const Rule> rules, const Rule& r, const InductionConfig& config) {
  for (const Rule& member : rules)
    if (member == r) return true;
  std::vector<Rule> augmented(rules.begin(), rules.end());
  const RuleLimits limits = config.rule_limits();
  for (int i = 1; i <= r.arity(); ++i) {
    const SymbolSeq anchor{Symbol::terminal(anchor_token(i))};
    augmented.push_back(Rule::create(anchor, anchor, limits));
  }
  return can_derive(std::span<const Rule>(augmented), anchored_tokens(r.source()),
                    anchored_tokens(r.target()));
}

std::vector<Rule> candidate_new_rules(std::span<const Rule> rules,
                                      const InductionConfig& config) {
  std::unordered_set<Rule, RuleHash> members(rules.begin(), rules.end());
  std::vector<Rule> out;
  std::unordered_set<Rule, RuleHash> seen;
  auto consider = [&](const Rule& g, const Rule& sibling) {
    if (members.count(g) || seen.count(g)) return;
    if (rule_derivable(rules, sibling, config)) {
      seen.insert(g);
      out.push_back(g);
    }
  };
  for (const Rule& f : rules) {
    for (const SplitPair& sp : split_rule(f, config)) {
      consider(sp.outer, sp.inner);
      consider(sp.inner, sp.outer);
    }
  }
  return out;
}

std::vector<Rule> eliminated_rules(std::span<const Rule> rules, const Rule& f,
                                   const InductionConfig& config) {
  for (const Rule& member : rules)
    if (member == f) return {};
  std::vector<Rule> out;
  for (const Rule& h : rules) {
    bool gone = false;
    for (const SplitPair& sp : split_rule(h, config)) {
      if (sp.outer == f && rule_derivable(rules, sp.inner, config)) gone = true;
      if (sp.inner == f && rule_derivable(rules, sp.outer, config)) gone = true;
      if (gone) break;
    }
    if (gone) out.push_back(h);
  }
  return out;
}

CodelengthReport codelength(std::span<const Rule> rules, const Dataset& dataset,
                            const InductionConfig& config, CodelengthMode mode) {
  CodelengthReport report;
  for (const Rule& r : rules) {
    report.nonterminal_count += static_cast<double>(r.nonterminal_occurrences());
    report.terminal_count += static_cast<double>(r.terminal_occurrences());
  }

  const std::size_t n = dataset.size();
  if (mode == CodelengthMode::exact || static_cast<std::size_t>(config.sample_k) >= n) {
    std::vector<double> logs(n, 0.0);
    std::vector<char> capped(n, 0);
    parallel_for(n, [&](std::size_t i) {
      bool c = false;
      logs[i] = log2_target_count(rules, std::span<const Token>(dataset.examples[i].source),
                                  config.target_cap, &c);
      capped[i] = c;
    });
    for (std::size_t i = 0; i < n; ++i) {
      report.log_targets_sum += logs[i];
      report.capped |= capped[i] != 0;
    }
  } else {
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    std::mt19937_64 rng(config.seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(static_cast<std::size_t>(config.sample_k));
    std::sort(ids.begin(), ids.end());
    std::vector<double> logs(ids.size(), 0.0);
    std::vector<char> capped(ids.size(), 0);
    parallel_for(ids.size(), [&](std::size_t k) {
      bool c = false;
      logs[k] = log2_target_count(rules, std::span<const Token>(dataset.examples[ids[k]].source),
                                  config.target_cap, &c);
      capped[k] = c;
    });
    double sum = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      sum += logs[k];
      report.capped |= capped[k] != 0;
    }
    report.log_targets_sum = sum * static_cast<double>(n) / static_cast<double>(ids.size());
  }

  report.total = config.l_nt * report.nonterminal_count + config.l_t * report.terminal_count +
                 report.log_targets_sum;
  return report;
}

namespace {

// Shared by codelength_delta and the greedy engine: the symbol-bit savings
// of the elimination set minus the candidate's own cost, and the sampled,
// scaled estimate of the unique-target increase.
double delta_bits_for(std::span<const Rule> rules, const Rule& f, std::span<const Rule> elim,
                      const Dataset& dataset,
                      const std::function<double(std::size_t)>& cbeta_log,
                      const InductionConfig& config) {
  double d_sym = -symbol_bits(f, config);
  for (const Rule& h : elim) d_sym += symbol_bits(h, config);

  // Eliminated rules stay derivable, so no target disappears: the unique
  // target count never shrinks and the symbol savings bound the delta from
  // above. A candidate that cannot pay for itself needs no sampling.
  if (d_sym <= 0) return d_sym;

  const auto segments = source_segments(f);
  std::vector<std::size_t> matching;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (rule_matches_source(segments, std::span<const Token>(dataset.examples[i].source)))
      matching.push_back(i);
  if (matching.empty()) return d_sym;

  std::mt19937_64 rng(mix_seed(config.seed, f.str()));
  std::vector<std::size_t> sample = matching;
  std::shuffle(sample.begin(), sample.end(), rng);
  const std::size_t k = std::min<std::size_t>(config.sample_k, sample.size());
  sample.resize(k);

  std::vector<Rule> after;
  after.reserve(rules.size() + 1);
  std::unordered_set<Rule, RuleHash> removed(elim.begin(), elim.end());
  for (const Rule& r : rules)
    if (!removed.count(r)) after.push_back(r);
  bool present = false;
  for (const Rule& r : after) present |= (r == f);
  if (!present) after.push_back(f);

  double increase = 0;
  for (std::size_t i : sample) {
    const auto src = std::span<const Token>(dataset.examples[i].source);
    increase +=
        log2_target_count(std::span<const Rule>(after), src, config.target_cap, nullptr) -
        cbeta_log(i);
  }
  increase *= static_cast<double>(matching.size()) / static_cast<double>(k);
  return d_sym - increase;
}

}  // namespace

double codelength_delta(std::span<const Rule> rules, const Rule& f, const Dataset& dataset,
                        const InductionConfig& config) {
  const auto elim = eliminated_rules(rules, f, config);
  return delta_bits_for(rules, f, std::span<const Rule>(elim), dataset,
                        [&](std::size_t i) {
                          return log2_target_count(
                              rules, std::span<const Token>(dataset.examples[i].source),
                              config.target_cap, nullptr);
                        },
                        config);
}

namespace {

// Greedy search state. Rules are interned into an arena; the candidate
// pool is keyed by rule serialization so scans and tie-breaks are
// deterministic regardless of thread count or hashing order. Cached
// derivability, candidate scores, and per-example target counts are
// invalidated when a rule sharing a source terminal token is added or
// removed (a rule with no source terminals invalidates everything).
class Engine {
 public:
  Engine(const Dataset& dataset, const InductionConfig& config)
      : cfg_(config), limits_(config.rule_limits()), data_(dataset) {}

  InductionResult run() {
    InductionResult result;
    init();
    for (int id : R_) result.trace.initial_set.push_back(arena_[id]);
    result.trace.initial_bits = total_bits_;

    int steps = 0;
    while (steps < cfg_.max_steps) {
      refresh_candidates();
      bool accepted = false;
      while (true) {
        const int best = select_best();
        if (best < 0) break;
        if (cands_[best].delta < 0) break;
        // score the winner against the current state before committing;
        // cached deltas can drift between invalidations
        const double fresh = score_candidate(best, view(), subset_);
        cands_[best].delta = fresh;
        cands_[best].delta_valid = true;
        if (fresh < 0) continue;
        apply(best, fresh, result.trace);
        accepted = true;
        break;
      }
      if (!accepted) break;
      ++steps;
    }

    append_long_examples(result.trace);

    std::vector<Rule> rules;
    rules.reserve(R_.size());
    for (int id : R_) rules.push_back(arena_[id]);
    result.grammar = Grammar(std::move(rules));
    return result;
  }

 private:
  struct Prov {
    int parent;
    int sibling;
  };
  struct Cand {
    std::vector<Prov> prov;
    double delta = 0;
    bool delta_valid = false;
  };

  const InductionConfig& cfg_;
  RuleLimits limits_;
  const Dataset& data_;

  std::vector<Rule> arena_;
  std::unordered_map<Rule, int, RuleHash> arena_ids_;
  std::vector<std::vector<std::vector<Token>>> segments_;  // per arena rule
  std::vector<std::vector<Token>> token_sets_;  // sorted source terminals per arena rule
  std::vector<char> split_done_;
  std::vector<char> has_src_terminal_;

  std::set<int> R_;
  bool r_has_nt_rules_ = false;
  std::vector<Rule> anchored_view_;
  bool anchored_view_fresh_ = false;
  std::map<std::string, int> pool_;  // serialization -> arena id, candidates only
  std::unordered_map<int, Cand> cands_;
  std::unordered_map<int, char> derivable_;

  std::vector<const Example*> exs_;  // induction examples (shortest N)
  std::vector<const Example*> rest_;
  Dataset subset_;                   // the induction examples as a dataset
  std::vector<std::vector<Token>> example_tokens_;  // sorted per induction example
  std::vector<double> cbeta_log_;
  std::vector<char> cbeta_valid_;

  double total_bits_ = 0;

  int intern_rule(const Rule& r) {
    auto it = arena_ids_.find(r);
    if (it != arena_ids_.end()) return it->second;
    const int id = static_cast<int>(arena_.size());
    arena_.push_back(r);
    arena_ids_.emplace(arena_.back(), id);
    segments_.push_back(source_segments(r));
    std::vector<Token> tokens;
    for (Symbol s : r.source())
      if (s.is_terminal()) tokens.push_back(s.token());
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    has_src_terminal_.push_back(tokens.empty() ? 0 : 1);
    token_sets_.push_back(std::move(tokens));
    split_done_.push_back(0);
    return id;
  }

  // Whether some changed rule could take part in a derivation whose
  // source draws only on `tokens`: all of its source terminals occur there.
  bool any_usable_for(const std::vector<int>& changed, const std::vector<Token>& sorted_tokens) {
    for (int id : changed) {
      const auto& need = token_sets_[id];
      if (need.empty()) return true;
      bool ok = true;
      for (Token t : need)
        if (!std::binary_search(sorted_tokens.begin(), sorted_tokens.end(), t)) {
          ok = false;
          break;
        }
      if (ok) return true;
    }
    return false;
  }

  std::vector<Rule> view() const {
    std::vector<Rule> rules;
    rules.reserve(R_.size());
    for (int id : R_) rules.push_back(arena_[id]);
    return rules;
  }

  void init() {
    // shortest-N selection by total token length, stable on input order
    std::vector<const Example*> all;
    std::unordered_set<std::uint64_t> dedup;
    for (const Example& ex : data_.examples) {
      const std::uint64_t h =
          fnv1a64(tokens_text(ex.source) + "\t" + tokens_text(ex.target));
      if (dedup.insert(h).second) all.push_back(&ex);
    }
    std::stable_sort(all.begin(), all.end(), [](const Example* a, const Example* b) {
      if (a->source.size() != b->source.size()) return a->source.size() < b->source.size();
      return a->target.size() < b->target.size();
    });
    const std::size_t n = std::min<std::size_t>(cfg_.max_examples, all.size());
    exs_.assign(all.begin(), all.begin() + n);
    rest_.assign(all.begin() + n, all.end());

    for (const Example* ex : exs_) subset_.examples.push_back(*ex);
    for (const Rule& r : initialize_rules(subset_, cfg_)) {
      const int id = intern_rule(r);
      R_.insert(id);
    }
    for (int id : R_) ensure_split(id);

    example_tokens_.resize(exs_.size());
    for (std::size_t i = 0; i < exs_.size(); ++i) {
      example_tokens_[i].assign(exs_[i]->source.begin(), exs_[i]->source.end());
      std::sort(example_tokens_[i].begin(), example_tokens_[i].end());
      example_tokens_[i].erase(
          std::unique(example_tokens_[i].begin(), example_tokens_[i].end()),
          example_tokens_[i].end());
    }
    cbeta_log_.assign(exs_.size(), 0.0);
    cbeta_valid_.assign(exs_.size(), 0);
    refresh_cbeta_all();
    double sym = 0;
    for (int id : R_) sym += symbol_bits(arena_[id], cfg_);
    total_bits_ = sym;
    for (double v : cbeta_log_) total_bits_ += v;
  }

  void refresh_cbeta_all() {
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < exs_.size(); ++i)
      if (!cbeta_valid_[i]) todo.push_back(i);
    if (todo.empty()) return;
    const auto rules = view();
    parallel_for(todo.size(), [&](std::size_t k) {
      const std::size_t i = todo[k];
      cbeta_log_[i] = log2_target_count(std::span<const Rule>(rules),
                                        std::span<const Token>(exs_[i]->source),
                                        cfg_.target_cap, nullptr);
      cbeta_valid_[i] = 1;
    });
  }

  void ensure_split(int id) {
    if (split_done_[id]) return;
    split_done_[id] = 1;
    for (const SplitPair& sp : split_rule(arena_[id], cfg_)) {
      const int outer = intern_rule(sp.outer);
      const int inner = intern_rule(sp.inner);
      cands_[outer].prov.push_back({id, inner});
      cands_[outer].delta_valid = false;
      cands_[inner].prov.push_back({id, outer});
      cands_[inner].delta_valid = false;
      if (!R_.count(outer)) pool_.emplace(arena_[outer].str(), outer);
      if (!R_.count(inner)) pool_.emplace(arena_[inner].str(), inner);
    }
  }

  bool is_derivable(int id) {
    if (R_.count(id)) return true;
    auto it = derivable_.find(id);
    if (it != derivable_.end()) return it->second != 0;
    const bool d = compute_derivable(id);
    derivable_[id] = d ? 1 : 0;
    return d;
  }

  // The anchored view is the current rules plus identity rules for the
  // anchor tokens standing in for open links; rules whose terminals are
  // absent from a query are skipped by the parser itself.
  const std::vector<Rule>& anchored_view() {
    if (anchored_view_fresh_) return anchored_view_;
    anchored_view_ = view();
    for (int i = 1; i <= 4; ++i) {
      const SymbolSeq anchor{Symbol::terminal(anchor_token(i))};
      anchored_view_.push_back(Rule::create(anchor, anchor, limits_));
    }
    anchored_view_fresh_ = true;
    return anchored_view_;
  }

  bool compute_derivable(int id) {
    const Rule& r = arena_[id];
    if (!r_has_nt_rules_) {
      // only one-step derivations exist: membership decides
      return R_.count(id) > 0;
    }
    return can_derive(std::span<const Rule>(anchored_view()), anchored_tokens(r.source()),
                      anchored_tokens(r.target()));
  }

  std::vector<int> elim_for(int cand) {
    std::vector<int> elim;
    std::set<int> seen;
    for (const Prov& p : cands_[cand].prov) {
      if (!R_.count(p.parent) || seen.count(p.parent)) continue;
      if (is_derivable(p.sibling)) {
        seen.insert(p.parent);
        elim.push_back(p.parent);
      }
    }
    return elim;
  }

  // Re-scores invalidated candidates in descending order of their symbol
  // savings bound; since eliminations never remove targets, the true delta
  // cannot exceed the bound, so scoring stops as soon as the bound falls
  // under the best known delta. The chunk size is a fixed constant so the
  // scored set (and everything downstream) is identical for any thread
  // count.
  void refresh_candidates() {
    refresh_cbeta_all();

    double best_valid = -std::numeric_limits<double>::infinity();
    struct Pending {
      double bound;
      std::size_t symbols;
      int id;
    };
    std::vector<Pending> pending;
    for (const auto& [key, id] : pool_) {
      (void)key;
      Cand& c = cands_[id];
      if (c.delta_valid && has_src_terminal_[id]) {
        best_valid = std::max(best_valid, c.delta);
        continue;
      }
      // savings if every provenance parent were eliminated
      double bound = -symbol_bits(arena_[id], cfg_);
      std::set<int> parents;
      for (const Prov& p : c.prov)
        if (R_.count(p.parent) && parents.insert(p.parent).second)
          bound += symbol_bits(arena_[p.parent], cfg_);
      if (parents.empty()) continue;  // not in NEW(R)
      pending.push_back({bound, arena_[id].symbol_count(), id});
    }
    std::stable_sort(pending.begin(), pending.end(), [this](const Pending& a, const Pending& b) {
      if (a.bound != b.bound) return a.bound > b.bound;
      if (a.symbols != b.symbols) return a.symbols < b.symbols;
      return arena_[a.id].str() < arena_[b.id].str();
    });

    const auto rules = view();
    constexpr std::size_t kChunk = 16;
    for (std::size_t start = 0; start < pending.size(); start += kChunk) {
      if (pending[start].bound <= best_valid) break;
      const std::size_t end = std::min(start + kChunk, pending.size());
      // derivability is cached per sibling; warm the chunk's misses serially
      // to keep the parallel scoring read-only
      for (std::size_t k = start; k < end; ++k)
        for (const Prov& p : cands_[pending[k].id].prov)
          if (R_.count(p.parent)) is_derivable(p.sibling);
      std::vector<double> deltas(end - start, 0.0);
      parallel_for(end - start, [&](std::size_t k) {
        deltas[k] = score_candidate(pending[start + k].id, rules, subset_);
      });
      for (std::size_t k = start; k < end; ++k) {
        cands_[pending[k].id].delta = deltas[k - start];
        cands_[pending[k].id].delta_valid = true;
        best_valid = std::max(best_valid, deltas[k - start]);
      }
    }
  }

  double score_candidate(int cand, const std::vector<Rule>& rules, const Dataset& subset) {
    const auto elim_ids = elim_for(cand);
    std::vector<Rule> elim;
    elim.reserve(elim_ids.size());
    for (int id : elim_ids) elim.push_back(arena_[id]);
    return delta_bits_for(std::span<const Rule>(rules), arena_[cand],
                          std::span<const Rule>(elim), subset,
                          [&](std::size_t i) { return cbeta_log_[i]; }, cfg_);
  }

  // Liveness is implicit: a candidate without a derivable sibling has an
  // empty elimination set, so its fresh score is negative and the accept
  // loop skips past it.
  int select_best() {
    int best = -1;
    double best_delta = 0;
    std::size_t best_syms = 0;
    for (const auto& [key, id] : pool_) {
      (void)key;
      const Cand& c = cands_[id];
      if (!c.delta_valid) continue;
      bool has_parent = false;
      for (const Prov& p : c.prov)
        if (R_.count(p.parent)) {
          has_parent = true;
          break;
        }
      if (!has_parent) continue;
      const std::size_t syms = arena_[id].symbol_count();
      if (best < 0 || c.delta > best_delta ||
          (c.delta == best_delta && syms < best_syms)) {
        best = id;
        best_delta = c.delta;
        best_syms = syms;
      }
    }
    return best;
  }

  void apply(int cand, double delta, InductionTrace& trace) {
    const auto elim = elim_for(cand);

    anchored_view_fresh_ = false;
    R_.insert(cand);
    pool_.erase(arena_[cand].str());
    ensure_split(cand);
    if (!has_src_terminal_[cand]) r_has_nt_rules_ = true;
    for (Symbol s : arena_[cand].source())
      if (s.is_nonterminal()) r_has_nt_rules_ = true;

    for (int id : elim) {
      R_.erase(id);
      if (!cands_[id].prov.empty()) pool_.emplace(arena_[id].str(), id);
    }

    // the eliminated rules must stay derivable, or the training-set
    // invariant would silently break
    const auto rules = view();
    for (int id : elim) {
      if (!rule_derivable(std::span<const Rule>(rules), arena_[id], cfg_)) {
        R_.insert(id);
        pool_.erase(arena_[id].str());
      }
    }

    std::vector<int> changed = elim;
    changed.push_back(cand);

    // Sweep: a member that is derivable from the other members is pure
    // codelength (the single-split ELIM cannot see multi-step redundancy,
    // so composed leftovers would otherwise linger and keep feeding
    // degenerate split candidates). Removal preserves every training
    // derivation by substitution.
    double swept_bits = 0;
    std::vector<int> swept;
    sweep_redundant(changed, swept, swept_bits);

    invalidate(changed);

    total_bits_ -= delta + swept_bits;
    InductionStep step;
    step.rule = arena_[cand];
    step.delta_bits = delta + swept_bits;
    step.total_bits = total_bits_;
    for (int id : elim)
      if (!R_.count(id)) step.removed.push_back(arena_[id]);
    for (int id : swept) step.removed.push_back(arena_[id]);
    trace.steps.push_back(std::move(step));
  }

  // Removes members derivable without themselves. Only rules that some
  // changed rule is usable for can have become redundant.
  void sweep_redundant(std::vector<int>& changed, std::vector<int>& swept, double& bits) {
    bool progress = true;
    while (progress) {
      progress = false;
      std::vector<std::pair<std::string, int>> order;
      for (int id : R_) {
        if (!any_usable_for(changed, token_sets_[id])) continue;
        order.emplace_back(arena_[id].str(), id);
      }
      std::sort(order.begin(), order.end(), [this](const auto& a, const auto& b) {
        const auto sa = arena_[a.second].symbol_count();
        const auto sb = arena_[b.second].symbol_count();
        if (sa != sb) return sa > sb;
        return a.first < b.first;
      });
      for (const auto& [key, id] : order) {
        (void)key;
        if (!R_.count(id)) continue;
        R_.erase(id);
        anchored_view_fresh_ = false;
        if (rule_derivable(std::span<const Rule>(view()), arena_[id], cfg_)) {
          swept.push_back(id);
          changed.push_back(id);
          bits += symbol_bits(arena_[id], cfg_);
          if (!cands_[id].prov.empty()) pool_.emplace(arena_[id].str(), id);
          progress = true;
        } else {
          R_.insert(id);
        }
      }
    }
  }

  // A cached value can only have changed if some changed rule is usable
  // inside the derivations it summarizes, i.e. its source terminals are a
  // subset of the entry's tokens.
  void invalidate(const std::vector<int>& changed) {
    std::erase_if(derivable_, [&](const auto& kv) {
      return any_usable_for(changed, token_sets_[kv.first]);
    });

    // candidate deltas depend on their provenance parents: elimination
    // sets, sibling derivability, and the candidate's own matches all draw
    // on parent tokens
    for (auto& [id, c] : cands_) {
      if (!c.delta_valid) continue;
      bool hit = any_usable_for(changed, token_sets_[id]);
      for (const Prov& p : c.prov) {
        if (hit) break;
        hit = any_usable_for(changed, token_sets_[p.parent]);
      }
      if (hit) c.delta_valid = false;
    }

    for (std::size_t i = 0; i < exs_.size(); ++i) {
      if (!cbeta_valid_[i]) continue;
      if (any_usable_for(changed, example_tokens_[i])) cbeta_valid_[i] = 0;
    }
  }

  void append_long_examples(InductionTrace& trace) {
    if (rest_.empty()) return;
    const auto rules = view();
    std::vector<char> ok(rest_.size(), 0);
    parallel_for(rest_.size(), [&](std::size_t i) {
      ok[i] = can_derive(std::span<const Rule>(rules),
                         std::span<const Token>(rest_[i]->source),
                         std::span<const Token>(rest_[i]->target))
                  ? 1
                  : 0;
    });
    for (std::size_t i = 0; i < rest_.size(); ++i) {
      if (ok[i]) continue;
      const int id = intern_rule(
          Rule::create(to_symbols(rest_[i]->source), to_symbols(rest_[i]->target), limits_));
      if (R_.insert(id).second) ++trace.appended_long_example_rules;
    }
  }
};

}  // namespace

InductionResult induce(const Dataset& dataset, const InductionConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("cannot induce from an empty dataset");
  Engine engine(dataset, config);
  return engine.run();
}

void write_trace_jsonl(const InductionTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out.precision(17);
  std::size_t step = 0;
  for (const InductionStep& s : trace.steps) {
    ++step;
    // minimal JSON by hand keeps the line format byte-stable
    std::string rule = s.rule.str();
    std::string escaped;
    for (char c : rule) {
      if (c == '"' || c == '\\') escaped += '\\';
      escaped += c;
    }
    out << "{\"step\": " << step << ", \"rule\": \"" << escaped
        << "\", \"delta_bits\": " << s.delta_bits << ", \"total_bits\": " << s.total_bits
        << "}\n";
  }
}

}  // namespace nqg
