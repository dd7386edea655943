#include <doctest.h>

#include "nqg/datagen.h"
#include "nqg/induction.h"
#include "nqg/model.h"
#include "nqg/parallel.h"
#include "nqg/splits.h"

using namespace nqg;

namespace {

struct ThreadGuard {
  ThreadGuard() { set_thread_count(0); }
  ~ThreadGuard() { set_thread_count(0); }
};

}  // namespace

TEST_SUITE_BEGIN("parallel");

TEST_CASE("parallel_for covers every index exactly once") {
  ThreadGuard guard;
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("forest building matches the serial reference") {
  ThreadGuard guard;
  const Dataset corpus = synth_funql_corpus({120, 3, 2});
  const Grammar grammar = synth_funql_grammar();
  const auto serial = build_forests_serial(grammar, corpus);
  set_thread_count(0);
  const auto parallel = build_forests(grammar, corpus);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].reachable == parallel[i].reachable);
    CHECK(serial[i].full.nodes.size() == parallel[i].full.nodes.size());
    CHECK(serial[i].full.count_derivations(100000) ==
          parallel[i].full.count_derivations(100000));
    CHECK(serial[i].constrained.nodes.size() == parallel[i].constrained.nodes.size());
  }
}

TEST_CASE("profile construction matches the serial reference") {
  ThreadGuard guard;
  const Dataset corpus = synth_funql_corpus({150, 5, 3});
  const Extractor funql{ExtractorKind::funql_tree, 2};
  const CompoundProfile serial = build_profile_serial(corpus, funql);
  set_thread_count(0);
  const CompoundProfile parallel = build_profile(corpus, funql);
  CHECK(serial.atom_freqs == parallel.atom_freqs);
  CHECK(serial.compound_freqs == parallel.compound_freqs);
}

TEST_CASE("induction output is identical across thread counts") {
  ThreadGuard guard;
  const Dataset corpus = toy_corpus(80, 6);
  InductionConfig cfg;
  cfg.seed = 17;

  set_thread_count(1);
  const InductionResult serial = induce(corpus, cfg);
  set_thread_count(0);
  const InductionResult parallel = induce(corpus, cfg);

  CHECK(serial.grammar.to_text() == parallel.grammar.to_text());
  REQUIRE(serial.trace.steps.size() == parallel.trace.steps.size());
  for (std::size_t i = 0; i < serial.trace.steps.size(); ++i) {
    CHECK(serial.trace.steps[i].rule == parallel.trace.steps[i].rule);
    CHECK(serial.trace.steps[i].delta_bits ==
          doctest::Approx(parallel.trace.steps[i].delta_bits).epsilon(1e-12));
  }
}

TEST_SUITE_END();
