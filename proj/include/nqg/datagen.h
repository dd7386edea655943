#ifndef NQG_DATAGEN_H
#define NQG_DATAGEN_H

#include <cstdint>

#include "nqg/dataset.h"
#include "nqg/grammar.h"
#include "nqg/target_cfg.h"

namespace nqg {

// Built-in corpora for demos, benchmarks, and the acceptance suite.

// The full SCAN command language (20910 command/action pairs) generated
// from its published phrase grammar and interpretation, in a fixed
// enumeration order, plus the standard add-primitive and length splits.
Dataset scan_dataset();

struct SplitFiles {
  Dataset train;
  Dataset test;
};
// Train: commands without the primitive, plus the bare primitive itself.
// Test: every other command containing it.
SplitFiles scan_jump_split();
SplitFiles scan_turn_left_split();
// Train: action sequences of up to 22 tokens; test: the longer ones.
SplitFiles scan_length_split();
// Accepts any non-empty sequence of SCAN action tokens.
TargetCfg scan_target_cfg();

// A compositional natural-language -> FunQL corpus drawn from a fixed
// 12-rule synchronous grammar (category nouns, entity placeholders, two
// nestable modifiers, three sentence wrappers).
struct SynthConfig {
  std::size_t size = 1000;
  std::uint64_t seed = 1;
  int max_modifier_depth = 3;
};
Dataset synth_funql_corpus(const SynthConfig& config = {});
Grammar synth_funql_grammar();      // the generator's 12 rules
TargetCfg synth_funql_target_cfg();

// A 6-rule toy generator for unit-level induction checks.
Grammar toy_generator_grammar();
Dataset toy_corpus(std::size_t size, std::uint64_t seed);

}  // namespace nqg

#endif
