#ifndef NQG_SPLITS_H
#define NQG_SPLITS_H

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nqg/dataset.h"

namespace nqg {

// Atom/compound extraction from target representations. FunQL and
// bracketed trees yield tree symbols as atoms and local tree edges as
// compounds; token mode yields tokens and adjacent bigrams.
enum class ExtractorKind { funql_tree, bracketed_tree, token };

struct Extractor {
  ExtractorKind kind = ExtractorKind::funql_tree;
  int order = 1;  // 1: parent-child edges; 2: adds grandparent chains (tree kinds)
};

using Counts = std::map<std::string, double>;

Counts extract_atoms(std::span<const Token> target, const Extractor& extractor);
Counts extract_compounds(std::span<const Token> target, const Extractor& extractor);

// Weighted frequency distributions over a dataset half, normalized to 1.
struct CompoundProfile {
  Counts atom_freqs;
  Counts compound_freqs;
};
CompoundProfile build_profile(const Dataset& dataset, const Extractor& extractor);
CompoundProfile build_profile_serial(const Dataset& dataset, const Extractor& extractor);

// Chernoff coefficient C_alpha(P || Q) = sum_k p_k^alpha q_k^(1-alpha),
// over the shared support. Inputs must be normalized; alpha in (0, 1).
double chernoff(const Counts& p, const Counts& q, double alpha);

// Compound divergence D_C = 1 - C_0.1(F_train || F_test).
double compound_divergence(const Dataset& train, const Dataset& test, const Extractor& extractor);

struct SplitResult {
  Dataset train;
  Dataset test;
  double divergence = 0;
  double missing_atom_fraction = 0;  // test examples with an atom absent from train
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<double> divergence_trace;  // after each accepted swap (tmcd)
  int atom_violations = 0;  // states where the atom constraint failed (audited per swap)
  std::string note;
};

SplitResult random_split(const Dataset& dataset, std::size_t train_size, std::size_t test_size,
                         std::uint64_t seed, const Extractor& extractor);

enum class LengthMeasure { source_tokens, target_tokens };
// Longest examples go to the test side; the tie group at the boundary goes
// wholly to train, so max train length <= min test length.
SplitResult length_split(const Dataset& dataset, LengthMeasure measure, double test_fraction,
                         const Extractor& extractor);

using TemplateFn = std::function<std::string(const Example&)>;
// Default anonymizer: placeholder tokens (m0, m1, ...) and numbers become a
// wildcard; the template is the anonymized target string.
TemplateFn default_anonymizer();
SplitResult template_split(const Dataset& dataset, std::size_t train_size, std::uint64_t seed,
                           const Extractor& extractor, const TemplateFn& anonymizer = {});

struct TmcdConfig {
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::uint64_t seed = 0;
  int max_iterations = 1000;
  int candidates_per_iteration = 1000;
};

// Three phases: random split, swaps until every atom occurs in train, then
// greedy sampled swaps that strictly increase compound divergence while
// preserving the atom constraint.
SplitResult tmcd_split(const Dataset& dataset, const Extractor& extractor,
                       const TmcdConfig& config);

struct AtomConstraintError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nqg

#endif
