#include <doctest.h>

#include <fstream>

#include "nqg/eval.h"

using namespace nqg;

namespace {

Dataset make_dataset(const std::vector<std::pair<std::string, std::string>>& pairs) {
  Dataset d;
  d.provenance = "inline";
  for (const auto& [src, tgt] : pairs) {
    Example ex;
    ex.source = intern_tokens(src);
    ex.target = intern_tokens(tgt);
    ex.id = static_cast<std::int32_t>(d.examples.size());
    d.examples.push_back(std::move(ex));
  }
  return d;
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("hybrid prediction prefers the parser output") {
  const auto nqg_out = std::optional<std::vector<Token>>(intern_tokens("A B"));
  const auto fallback = intern_tokens("C D");
  CHECK(hybrid_predict(nqg_out, fallback) == intern_tokens("A B"));
  CHECK(hybrid_predict(std::nullopt, fallback) == fallback);
}

TEST_CASE("echo fallback returns the source") {
  const FallbackPredictor echo = FallbackPredictor::echo();
  const auto out = echo.predict({intern_tokens("turn left twice")});
  REQUIRE(out.size() == 1);
  CHECK(tokens_text(out[0]) == "turn left twice");
}

TEST_CASE("file fallback requires full coverage") {
  const std::string path = "/tmp/nqg-test-fallback.tsv";
  {
    std::ofstream out(path);
    out << "jump\tJUMP\nwalk\tI_WALK\n";
  }
  const std::vector<std::vector<Token>> covered = {intern_tokens("jump"), intern_tokens("walk")};
  const FallbackPredictor fb = FallbackPredictor::from_file(path, covered);
  const auto out = fb.predict(covered);
  CHECK(tokens_text(out[0]) == "JUMP");
  CHECK(tokens_text(out[1]) == "I_WALK");

  const std::vector<std::vector<Token>> uncovered = {intern_tokens("run")};
  CHECK_THROWS(FallbackPredictor::from_file(path, uncovered));
  std::remove(path.c_str());
}

TEST_CASE("command fallback runs once in batch mode") {
  const FallbackPredictor fb = FallbackPredictor::from_command("sed s/x/y/");
  const auto out = fb.predict({intern_tokens("a x"), intern_tokens("x b")});
  REQUIRE(out.size() == 2);
  CHECK(tokens_text(out[0]) == "a y");
  CHECK(tokens_text(out[1]) == "y b");
}

TEST_CASE("evaluate computes the worked coverage and precision example") {
  // 10 examples, parser answers 4 with 3 correct, hybrid correct on 7
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < 10; ++i)
    pairs.push_back({"q" + std::to_string(i), "t" + std::to_string(i)});
  const Dataset gold = make_dataset(pairs);

  std::vector<std::optional<std::vector<Token>>> nqg(10);
  std::vector<std::vector<Token>> hybrid(10);
  for (int i = 0; i < 10; ++i) hybrid[i] = intern_tokens("wrong");
  for (int i = 0; i < 3; ++i) nqg[i] = gold.examples[i].target;  // correct parser outputs
  nqg[3] = intern_tokens("wrong");
  for (int i = 0; i < 7; ++i) hybrid[i] = gold.examples[i].target;
  hybrid[3] = intern_tokens("wrong");
  hybrid[7] = gold.examples[7].target;  // 0,1,2,4,5,6,7 correct = 7

  std::vector<PerExampleRecord> records;
  const EvalReport report = evaluate(gold, nqg, hybrid, &records);
  CHECK(report.coverage == doctest::Approx(0.4));
  REQUIRE(report.precision.has_value());
  CHECK(*report.precision == doctest::Approx(0.75));
  CHECK(report.exact_match == doctest::Approx(0.7));
  CHECK(records.size() == 10);
  CHECK(report.nqg_output_count == 4);
  // coverage * dataset_size recovers the output count exactly
  CHECK(report.coverage * static_cast<double>(report.dataset_size) ==
        doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("all correct without abstentions") {
  const Dataset gold = make_dataset({{"a", "A"}, {"b", "B"}});
  std::vector<std::optional<std::vector<Token>>> nqg = {gold.examples[0].target,
                                                        gold.examples[1].target};
  std::vector<std::vector<Token>> hybrid = {gold.examples[0].target, gold.examples[1].target};
  const EvalReport report = evaluate(gold, nqg, hybrid);
  CHECK(report.exact_match == 1.0);
  CHECK(report.coverage == 1.0);
  CHECK(*report.precision == 1.0);
}

TEST_CASE("zero coverage reports null precision") {
  const Dataset gold = make_dataset({{"a", "A"}});
  std::vector<std::optional<std::vector<Token>>> nqg = {std::nullopt};
  std::vector<std::vector<Token>> hybrid = {intern_tokens("A")};
  const EvalReport report = evaluate(gold, nqg, hybrid);
  CHECK(report.coverage == 0.0);
  CHECK_FALSE(report.precision.has_value());
  CHECK(report.to_json().find("\"precision\": null") != std::string::npos);
}

TEST_CASE("misaligned predictions are an error") {
  const Dataset gold = make_dataset({{"a", "A"}});
  std::vector<std::optional<std::vector<Token>>> nqg;
  std::vector<std::vector<Token>> hybrid;
  CHECK_THROWS(evaluate(gold, nqg, hybrid));
}

TEST_CASE("hybrid accuracy is bounded below by coverage times precision") {
  // with an always-wrong fallback the bound is met with equality; with an
  // oracle fallback the hybrid gains exactly the abstention mass
  const int n = 12;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int i = 0; i < n; ++i)
    pairs.push_back({"q" + std::to_string(i), "t" + std::to_string(i)});
  const Dataset gold = make_dataset(pairs);

  std::vector<std::optional<std::vector<Token>>> nqg(n);
  for (int i = 0; i < 5; ++i) nqg[i] = gold.examples[i].target;  // 5 covered, all correct
  nqg[5] = intern_tokens("off");                                  // 1 covered, wrong

  std::vector<std::vector<Token>> always_wrong(n, intern_tokens("junk"));
  std::vector<std::vector<Token>> hybrid_wrong(n), hybrid_oracle(n);
  for (int i = 0; i < n; ++i) {
    hybrid_wrong[i] = hybrid_predict(nqg[i], always_wrong[i]);
    hybrid_oracle[i] = hybrid_predict(nqg[i], gold.examples[i].target);
  }

  const EvalReport wrong = evaluate(gold, nqg, hybrid_wrong);
  REQUIRE(wrong.precision.has_value());
  CHECK(wrong.exact_match ==
        doctest::Approx(wrong.coverage * (*wrong.precision)).epsilon(1e-12));

  const EvalReport oracle = evaluate(gold, nqg, hybrid_oracle);
  CHECK(oracle.exact_match ==
        doctest::Approx(oracle.coverage * (*oracle.precision) + (1.0 - oracle.coverage))
            .epsilon(1e-12));
}

TEST_CASE("grammar statistics") {
  const Grammar g = Grammar::parse_text("a ### A\nb ### B\n");
  SUBCASE("ratio is examples over rules") {
    Dataset d;
    d.examples.resize(16727);
    const GrammarStats s = grammar_stats(Grammar::parse_text([] {
                                           std::string text;
                                           for (int i = 0; i < 20; ++i)
                                             text += "r" + std::to_string(i) + " ### R" +
                                                     std::to_string(i) + "\n";
                                           return text;
                                         }()),
                                         d);
    CHECK(s.examples == 16727);
    CHECK(s.rules == 20);
    CHECK(s.ratio == doctest::Approx(836.35).epsilon(1e-6));
  }
  SUBCASE("identity-inflated grammars can undershoot one") {
    Dataset d;
    d.examples.resize(3282);
    std::string text;
    for (int i = 0; i < 4155; ++i)
      text += "s" + std::to_string(i) + " ### T" + std::to_string(i) + "\n";
    const GrammarStats s = grammar_stats(Grammar::parse_text(text), d);
    CHECK(s.ratio == doctest::Approx(0.79).epsilon(1e-2));
  }
  SUBCASE("one example one rule") {
    Dataset d;
    d.examples.resize(1);
    const GrammarStats s = grammar_stats(Grammar::parse_text("a ### A\n"), d);
    CHECK(s.ratio == 1.0);
  }
}

TEST_SUITE_END();
