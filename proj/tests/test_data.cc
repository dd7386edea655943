#include <doctest.h>

#include "nqg/datagen.h"
#include "nqg/dataset.h"
#include "nqg/funql.h"

using namespace nqg;

TEST_SUITE_BEGIN("data");

TEST_CASE("tsv parsing splits tokens on whitespace") {
  const Dataset d = parse_tsv("jump\tJUMP\n", "test");
  REQUIRE(d.size() == 1);
  CHECK(d.examples[0].source.size() == 1);
  CHECK(d.examples[0].target.size() == 1);
  CHECK(tokens_text(d.examples[0].source) == "jump");

  const Dataset scan = parse_tsv("turn left twice\tI_TURN_LEFT I_TURN_LEFT\n", "test");
  CHECK(scan.examples[0].source.size() == 3);
  CHECK(scan.examples[0].target.size() == 2);
}

TEST_CASE("tsv format errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_tsv("a\tA\nb\tB\tC\n", "f"), doctest::Contains("line 2"), DataError);
  CHECK_THROWS_WITH_AS(parse_tsv("a A\n", "f"), doctest::Contains("line 1"), DataError);
  CHECK_THROWS_WITH_AS(parse_tsv("a\t\n", "f"), doctest::Contains("empty target"), DataError);
  CHECK_THROWS_WITH_AS(parse_tsv("a\tA\n\xff\tB\n", "f"), doctest::Contains("UTF-8"), DataError);
}

TEST_CASE("ids are dense ordinals") {
  const Dataset d = parse_tsv("a\tA\nb\tB\nc\tC\n", "test");
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK(d.examples[i].id == static_cast<std::int32_t>(i));
}

TEST_CASE("scan format loads IN/OUT lines and round-trips through tsv") {
  const Dataset d = parse_scan("IN: jump OUT: JUMP\nIN: turn left OUT: I_TURN_LEFT\n", "scan");
  REQUIRE(d.size() == 2);
  CHECK(tokens_text(d.examples[0].source) == "jump");
  CHECK(tokens_text(d.examples[0].target) == "JUMP");
  CHECK(tokens_text(d.examples[1].source) == "turn left");

  const Dataset again = parse_tsv(dataset_tsv(d), "roundtrip");
  REQUIRE(again.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(again.examples[i] == d.examples[i]);
  CHECK(dataset_hash(again) == dataset_hash(d));
}

TEST_CASE("scan format errors") {
  CHECK_THROWS(parse_scan("IN: jump\n", "scan"));
  CHECK_THROWS(parse_scan("IN: x OUT:\n", "scan"));
}

TEST_CASE("dataset hash is stable across loads") {
  const std::string text = "walk twice\tI_WALK I_WALK\njump\tJUMP\n";
  CHECK(dataset_hash(parse_tsv(text, "a")) == dataset_hash(parse_tsv(text, "b")));
  CHECK(dataset_hash(parse_tsv(text, "a")) !=
        dataset_hash(parse_tsv("jump\tJUMP\n", "c")));
}

TEST_CASE("funql validation reports failures with example ids") {
  const Dataset ok = parse_tsv("q\tanswer ( state )\nq2\tcount ( m0 )\n", "test");
  CHECK(validate_funql(ok).ok());

  const Dataset bad = parse_tsv("q\tanswer ( state )\nq2\tanswer ( state\n", "test");
  const FunqlReport report = validate_funql(bad);
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].id == 1);
}

TEST_CASE("placeholder targets parse as leaves") {
  const TreeNode t = parse_funql(intern_tokens("answer ( m0 )"));
  REQUIRE(t.children.size() == 1);
  CHECK(t.children[0].label == "m0");
  CHECK(t.children[0].is_leaf());
}

TEST_CASE("funql trees") {
  const TreeNode t = parse_funql(intern_tokens("exclude ( longest ( x ) , y )"));
  CHECK(t.label == "exclude");
  REQUIRE(t.children.size() == 2);
  CHECK(t.children[0].label == "longest");
  CHECK(t.children[0].children.size() == 1);
  CHECK(t.children[1].label == "y");
  CHECK(tree_str(t) == "exclude(longest(x),y)");

  CHECK(parse_funql(intern_tokens("state")).is_leaf());
  CHECK_THROWS_AS(parse_funql(intern_tokens("f ( a , )")), TreeParseError);
  CHECK_THROWS_AS(parse_funql(intern_tokens("f ( a")), TreeParseError);
}

TEST_CASE("bracketed trees") {
  const TreeNode t = parse_bracketed(intern_tokens("( f a ( g b ) )"));
  CHECK(t.label == "f");
  REQUIRE(t.children.size() == 2);
  CHECK(t.children[0].label == "a");
  CHECK(t.children[1].label == "g");
  CHECK_THROWS_AS(parse_bracketed(intern_tokens("( f a")), TreeParseError);
}

TEST_CASE("built-in scan corpus has the expected shape") {
  const Dataset all = scan_dataset();
  CHECK(all.size() == 20910);

  const SplitFiles jump = scan_jump_split();
  CHECK(jump.test.size() == 7706);
  CHECK(jump.train.size() + jump.test.size() == all.size());
  // the bare primitive stays in train
  bool has_bare = false;
  for (const Example& ex : jump.train.examples)
    has_bare |= tokens_text(ex.source) == "jump";
  CHECK(has_bare);

  const SplitFiles tl = scan_turn_left_split();
  CHECK(tl.test.size() == 1208);

  const SplitFiles len = scan_length_split();
  CHECK(len.train.size() + len.test.size() == all.size());
  for (const Example& ex : len.train.examples) CHECK(ex.target.size() <= 22);
  for (const Example& ex : len.test.examples) CHECK(ex.target.size() > 22);

  const TargetCfg cfg = scan_target_cfg();
  for (std::size_t i = 0; i < 50; ++i)
    CHECK(cfg.accepts(std::span<const Token>(all.examples[i * 400].target)));
}

TEST_SUITE_END();
