#include <doctest.h>

#include <algorithm>
#include <set>

#include "nqg/parser.h"
#include "oracles.h"

using namespace nqg;

namespace {

Grammar scan_fragment() {
  return Grammar::parse_text(
      "turn right ### I_TURN_RIGHT\n"
      "NT_1 after NT_2 ### NT_2 NT_1\n"
      "NT_1 thrice ### NT_1 NT_1 NT_1\n"
      "jump ### JUMP\n");
}

std::set<std::string> derivation_strings(const ParseForest& f, const Grammar& g) {
  std::set<std::string> out;
  for (const Derivation& d : unpack_derivations(f, 100000))
    out.insert(derivation_str(d, g));
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("parser");

TEST_CASE("parse_source finds the unique SCAN derivation") {
  const Grammar g = scan_fragment();
  const auto src = intern_tokens("turn right after jump");
  const ParseForest f = parse_source(g, src);
  REQUIRE(f.parseable());
  const auto derivations = unpack_derivations(f, 100);
  REQUIRE(derivations.size() == 1);
  CHECK(derivation_source_yield(derivations[0], g) == src);
  CHECK(tokens_text(derivation_target_yield(derivations[0], g)) == "JUMP I_TURN_RIGHT");
}

TEST_CASE("empty grammar yields a rootless forest") {
  const Grammar g;
  const ParseForest f = parse_source(g, intern_tokens("turn right"));
  CHECK_FALSE(f.parseable());
  CHECK(f.count_derivations() == 0);
}

TEST_CASE("repeated target links splice the child yield repeatedly") {
  const Grammar g = scan_fragment();
  const ParseForest f = parse_source(g, intern_tokens("turn right thrice"));
  REQUIRE(f.parseable());
  const auto derivations = unpack_derivations(f, 100);
  REQUIRE(derivations.size() == 1);
  CHECK(tokens_text(derivation_target_yield(derivations[0], g)) ==
        "I_TURN_RIGHT I_TURN_RIGHT I_TURN_RIGHT");
}

TEST_CASE("parse_constrained accepts the nested GeoQuery-style derivation") {
  const Grammar g = Grammar::parse_text(
      "how many NT_1 pass through NT_2 ### answer ( count ( intersection ( NT_1 , loc_1 ( NT_2 "
      ") ) ) )\n"
      "rivers ### river\n"
      "the largest NT_1 ### largest ( NT_1 )\n"
      "state ### state\n");
  const auto src = intern_tokens("how many rivers pass through the largest state");
  const auto tgt =
      intern_tokens("answer ( count ( intersection ( river , loc_1 ( largest ( state ) ) ) ) )");
  const ParseForest f = parse_constrained(g, src, tgt);
  REQUIRE(f.parseable());
  const auto derivations = unpack_derivations(f, 100);
  REQUIRE(derivations.size() == 1);
  CHECK(derivation_source_yield(derivations[0], g) == src);
  CHECK(derivation_target_yield(derivations[0], g) == tgt);
  CHECK(can_derive(g, src, tgt));
}

TEST_CASE("parse_constrained rejects an incompatible pair") {
  const Grammar g = scan_fragment();
  const ParseForest f =
      parse_constrained(g, intern_tokens("turn right"), intern_tokens("JUMP"));
  CHECK_FALSE(f.parseable());
  CHECK_FALSE(can_derive(g, intern_tokens("turn right"), intern_tokens("JUMP")));
}

TEST_CASE("parse_constrained with a repeated target link") {
  const Grammar g = Grammar::parse_text("a NT_1 ### A NT_1 NT_1\nb ### B\n");
  const ParseForest f = parse_constrained(g, intern_tokens("a b"), intern_tokens("A B B"));
  REQUIRE(f.parseable());
  CHECK(unpack_derivations(f, 10).size() == 1);
}

TEST_CASE("enumerate_targets dedupes and reports exactness") {
  SUBCASE("single unit rule") {
    const Grammar g = Grammar::parse_text("a ### A\n");
    const auto e = enumerate_targets(g, intern_tokens("a"), 10);
    CHECK(e.exact);
    REQUIRE(e.targets.size() == 1);
    CHECK(tokens_text(e.targets[0]) == "A");
  }
  SUBCASE("two unit rules on the same source") {
    const Grammar g = Grammar::parse_text("a ### A\na ### B\n");
    const auto e = enumerate_targets(g, intern_tokens("a"), 10);
    CHECK(e.exact);
    CHECK(e.targets.size() == 2);
  }
  SUBCASE("scan fragment has a single target for jump after jump") {
    const Grammar g = scan_fragment();
    const auto e = enumerate_targets(g, intern_tokens("jump after jump"), 10);
    CHECK(e.exact);
    REQUIRE(e.targets.size() == 1);
    CHECK(tokens_text(e.targets[0]) == "JUMP JUMP");
  }
  SUBCASE("cap truncates and clears the exact flag") {
    const Grammar g = Grammar::parse_text("a ### A\na ### B\na ### C\n");
    const auto e = enumerate_targets(g, intern_tokens("a"), 2);
    CHECK_FALSE(e.exact);
    CHECK(e.targets.size() == 2);
  }
}

TEST_CASE("chart parsing matches brute-force enumeration on random grammars") {
  std::mt19937_64 rng(20240901);
  int tested = 0;
  for (int trial = 0; trial < 40 && tested < 25; ++trial) {
    const Grammar g = test::random_grammar(rng, 8);
    std::vector<test::OracleItem> all;
    if (!test::enumerate_all_derivations(g, 8, 40000, all)) continue;
    ++tested;

    for (int s = 0; s < 4; ++s) {
      const auto src = test::random_source(rng, g, 8);
      const auto expected = test::derivations_for_source(all, src);

      // parse_source unpacks to exactly the oracle's derivation set
      const ParseForest f = parse_source(g, src);
      std::set<std::string> got = derivation_strings(f, g);
      std::set<std::string> want;
      std::set<std::string> want_targets;
      for (const auto& item : expected) {
        want.insert(derivation_str(item.tree, g));
        want_targets.insert(tokens_text(item.target));
      }
      CHECK(got == want);

      // enumerate_targets agrees with the oracle target set
      const auto e = enumerate_targets(g, src, 100000);
      std::set<std::string> got_targets;
      for (const auto& t : e.targets) got_targets.insert(tokens_text(t));
      CHECK(e.exact);
      CHECK(got_targets == want_targets);

      // constrained parsing for each oracle target yields its subset
      for (const auto& target_str : want_targets) {
        const auto tgt = intern_tokens(target_str);
        const ParseForest cf = parse_constrained(g, src, tgt);
        std::set<std::string> cgot = derivation_strings(cf, g);
        std::set<std::string> cwant;
        for (const auto& item : expected)
          if (item.target == tgt) cwant.insert(derivation_str(item.tree, g));
        CHECK(cgot == cwant);
      }
    }
  }
  CHECK(tested >= 10);
}

TEST_CASE("substitution soundness: forest derivations replay through apply_rule") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Grammar g = test::random_grammar(rng, 6);
    const auto src = test::random_source(rng, g, 7);
    const ParseForest f = parse_source(g, src);
    bool truncated = false;
    for (const Derivation& d : unpack_derivations(f, 50, &truncated)) {
      const SymbolPair replayed = test::replay_derivation(d, g);
      CHECK(format_symbols(replayed.source) == tokens_text(src));
      CHECK(format_symbols(replayed.target) == tokens_text(derivation_target_yield(d, g)));
    }
  }
}

TEST_SUITE_END();
