#ifndef NQG_INDUCTION_H
#define NQG_INDUCTION_H

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nqg/dataset.h"
#include "nqg/grammar.h"
#include "nqg/parser.h"

namespace nqg {

struct InductionConfig {
  double l_nt = 1.0;   // bits per nonterminal symbol occurrence
  double l_t = 8.0;    // bits per terminal symbol occurrence
  int sample_k = 10;   // examples sampled for the target-count increase estimate
  int max_examples = 500;  // run on the shortest-N examples; the rest get verbatim rules
  bool allow_repeated_target_nt = false;
  std::uint64_t seed = 0;
  std::size_t target_cap = 1000;  // cap on unique-target enumeration per example
  int max_target_nt_repeat = 4;
  int max_steps = 100000;  // safety bound on the greedy loop

  RuleLimits rule_limits() const {
    return RuleLimits{2, max_target_nt_repeat, false};
  }
};

// Codelength L(R) = l_nt * C_N + l_t * C_T + sum over examples of
// log2(unique target count). Symbol counts are occurrence counts summed
// over the source and target strings of all rules.
struct CodelengthReport {
  double nonterminal_count = 0;  // C_N
  double terminal_count = 0;     // C_T
  double log_targets_sum = 0;    // possibly a lower bound, see `capped`
  double total = 0;
  bool capped = false;  // some enumeration hit the target cap
};

enum class CodelengthMode { exact, sampled };

struct InductionStep {
  Rule rule;
  double delta_bits = 0;
  double total_bits = 0;
  std::vector<Rule> removed;  // ELIM set applied with this step
};

struct InductionTrace {
  double initial_bits = 0;
  std::vector<Rule> initial_set;
  std::size_t appended_long_example_rules = 0;
  std::vector<InductionStep> steps;
};

struct InductionResult {
  Grammar grammar;
  InductionTrace trace;
};

// Initialization: one rule per distinct example, plus identity rules
// NT -> <k, k> for every maximal token substring shared between the source
// and target of some example.
std::vector<Rule> initialize_rules(const Dataset& dataset, const InductionConfig& config = {});

// SPLIT: ways to factor `rule` into an outer rule with one fresh linked
// nonterminal and the inner rule it abstracts. `link` is the canonical
// index of the fresh nonterminal in `outer`; applying `inner` there
// reproduces the input. Repeated target substrings are replaced across all
// occurrences when allow_repeated_target_nt is set, and never partially.
// Parentheses must stay balanced in every target string.
struct SplitPair {
  Rule outer;
  Rule inner;
  int link = 1;
};
std::vector<SplitPair> split_rule(const Rule& rule, const InductionConfig& config = {});

// Whether `r` can be derived from `rules`. Nonterminal placeholders in `r`
// are rewritten to fresh anchor tokens present on both sides, reducing the
// check to string derivability.
bool rule_derivable(std::span<const Rule> rules, const Rule& r, const InductionConfig& config = {});

// NEW(R): rules g arising from splitting some member of R whose sibling is
// already derivable from R. Members of R themselves are not candidates.
std::vector<Rule> candidate_new_rules(std::span<const Rule> rules,
                                      const InductionConfig& config = {});

// ELIM(R, f): members of R that become redundant once f is added. Empty
// when f is already a member.
std::vector<Rule> eliminated_rules(std::span<const Rule> rules, const Rule& f,
                                   const InductionConfig& config = {});

CodelengthReport codelength(std::span<const Rule> rules, const Dataset& dataset,
                            const InductionConfig& config, CodelengthMode mode);

// Delta-L of adding f (and removing ELIM(R, f)): positive means the
// codelength shrinks. The unique-target increase is estimated on a sampled
// subset of the examples matching f, scaled to all matching examples.
double codelength_delta(std::span<const Rule> rules, const Rule& f, const Dataset& dataset,
                        const InductionConfig& config);

// Greedy whole-pipeline induction: initialize on the shortest examples,
// add argmax-delta candidates until no candidate keeps the codelength from
// growing, then append verbatim rules for longer examples that the induced
// grammar cannot derive. The result derives every training example.
InductionResult induce(const Dataset& dataset, const InductionConfig& config);

void write_trace_jsonl(const InductionTrace& trace, const std::string& path);

}  // namespace nqg

#endif
