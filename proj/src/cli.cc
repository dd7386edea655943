#include "nqg/cli.h"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nqg/datagen.h"
#include "nqg/dataset.h"
#include "nqg/eval.h"
#include "nqg/induction.h"
#include "nqg/model.h"
#include "nqg/parallel.h"
#include "nqg/parser.h"
#include "nqg/splits.h"
#include "nqg/target_cfg.h"

namespace nqg {

namespace {

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

void log_input(const std::string& role, const std::string& path) {
  std::cerr << "[nqg] input " << role << "=" << path << " fnv1a64=" << std::hex
            << file_hash(path) << std::dec << "\n";
}

void log_config(const CLI::App* cmd) {
  std::cerr << "[nqg] " << cmd->get_name() << " config:";
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto results = opt->results();
    if (results.empty()) {
      if (!opt->get_default_str().empty())
        std::cerr << " " << opt->get_lnames()[0] << "=" << opt->get_default_str();
      continue;
    }
    std::cerr << " " << opt->get_lnames()[0] << "=";
    for (std::size_t i = 0; i < results.size(); ++i)
      std::cerr << (i ? "," : "") << results[i];
  }
  std::cerr << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

struct InferenceArgs {
  std::string grammar_path;
  std::string params_path;
  std::string cfg_path;
  std::string test_path;
  std::string fallback_file;
  std::string fallback_cmd;
  std::string report_path;
  std::string per_example_path;
};

void add_inference_flags(CLI::App* cmd, InferenceArgs& args) {
  cmd->add_option("--grammar", args.grammar_path, "induced grammar file")->required();
  cmd->add_option("--params", args.params_path, "trained model parameters")->required();
  cmd->add_option("--target-cfg", args.cfg_path, "target validity CFG")->required();
  cmd->add_option("--test", args.test_path, "evaluation TSV")->required();
  cmd->add_option("--fallback-file", args.fallback_file,
                  "TSV of source -> prediction used when the parser abstains");
  cmd->add_option("--fallback-cmd", args.fallback_cmd,
                  "command reading source lines on stdin, one prediction per line");
  cmd->add_option("--report", args.report_path, "summary report JSON path");
  cmd->add_option("--per-example", args.per_example_path, "per-example JSONL path");
}

struct InferenceOutput {
  Dataset gold;
  std::vector<std::optional<std::vector<Token>>> nqg;
  std::vector<std::vector<Token>> hybrid;
  Grammar grammar;
};

InferenceOutput run_inference(const InferenceArgs& args) {
  log_input("grammar", args.grammar_path);
  log_input("params", args.params_path);
  log_input("target-cfg", args.cfg_path);
  log_input("test", args.test_path);

  InferenceOutput out;
  out.grammar = Grammar::load(args.grammar_path);
  const ModelParams params = ModelParams::load(args.params_path);
  if (params.rule_count() != out.grammar.size())
    throw std::runtime_error("params were trained for a grammar with " +
                             std::to_string(params.rule_count()) + " rules, got " +
                             std::to_string(out.grammar.size()));
  const TargetCfg cfg = TargetCfg::load(args.cfg_path);
  out.gold = load_tsv(args.test_path);

  out.nqg.resize(out.gold.size());
  parallel_for(out.gold.size(), [&](std::size_t i) {
    const Prediction p =
        predict(out.grammar, params, cfg, std::span<const Token>(out.gold.examples[i].source));
    if (!p.abstained()) out.nqg[i] = *p.target;
  });

  std::vector<std::vector<Token>> sources;
  sources.reserve(out.gold.size());
  for (const Example& ex : out.gold.examples) sources.push_back(ex.source);

  std::vector<std::vector<Token>> fallback(out.gold.size());
  if (!args.fallback_file.empty() || !args.fallback_cmd.empty()) {
    const FallbackPredictor fb = !args.fallback_file.empty()
                                     ? FallbackPredictor::from_file(args.fallback_file, sources)
                                     : FallbackPredictor::from_command(args.fallback_cmd);
    fallback = fb.predict(sources);
  }

  out.hybrid.resize(out.gold.size());
  for (std::size_t i = 0; i < out.gold.size(); ++i)
    out.hybrid[i] = hybrid_predict(out.nqg[i], fallback[i]);
  return out;
}

void write_per_example(const std::string& path, const std::vector<PerExampleRecord>& records) {
  std::ostringstream out;
  for (const PerExampleRecord& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["source"] = r.source;
    j["gold"] = r.gold;
    if (r.nqg.has_value())
      j["nqg"] = *r.nqg;
    else
      j["nqg"] = nullptr;
    j["hybrid"] = r.hybrid;
    j["nqg_correct"] = r.nqg_correct;
    j["hybrid_correct"] = r.hybrid_correct;
    out << j.dump() << '\n';
  }
  write_text(path, out.str());
}

int cmd_induce(const std::string& train_path, const std::string& out_path,
               const InductionConfig& config, const std::string& trace_path) {
  log_input("train", train_path);
  const Dataset dataset = load_tsv(train_path);
  const InductionResult result = induce(dataset, config);
  result.grammar.save(out_path);
  if (!trace_path.empty()) write_trace_jsonl(result.trace, trace_path);
  std::cerr << "[nqg] induced " << result.grammar.size() << " rules in "
            << result.trace.steps.size() << " greedy steps ("
            << result.trace.appended_long_example_rules << " verbatim long-example rules)\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"grammar-based semantic parsing toolkit"};
  app.set_config("--config", "", "flat key=value config file; flags override");
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->default_val(0);
  app.require_subcommand(1);

  // ---- induce ----
  auto* induce_cmd = app.add_subcommand("induce", "induce a grammar from training pairs");
  std::string induce_train, induce_out, induce_trace;
  InductionConfig icfg;
  induce_cmd->add_option("--train", induce_train, "training TSV")->required();
  induce_cmd->add_option("--out", induce_out, "output grammar file")->required();
  induce_cmd->add_option("--l-nt", icfg.l_nt, "bits per nonterminal symbol")->default_val(1.0);
  induce_cmd->add_option("--l-t", icfg.l_t, "bits per terminal symbol")->default_val(8.0);
  induce_cmd->add_option("--sample-k", icfg.sample_k, "examples sampled per candidate")
      ->default_val(10);
  induce_cmd->add_option("--max-examples", icfg.max_examples, "shortest-N example cutoff")
      ->default_val(500);
  induce_cmd
      ->add_option("--allow-repeated-target-nt", icfg.allow_repeated_target_nt,
                   "let splits abstract repeated target substrings")
      ->default_val(false);
  induce_cmd->add_option("--seed", icfg.seed, "rng seed")->default_val(0);
  induce_cmd->add_option("--target-cap", icfg.target_cap, "unique-target enumeration cap")
      ->default_val(1000);
  induce_cmd->add_option("--trace", induce_trace, "JSONL trace of accepted steps");

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train the parsing model on a grammar");
  std::string train_grammar, train_tsv, train_cfg, train_out;
  TrainConfig tcfg;
  ModelConfig mcfg;
  train_cmd->add_option("--grammar", train_grammar, "induced grammar file")->required();
  train_cmd->add_option("--train", train_tsv, "training TSV")->required();
  train_cmd->add_option("--target-cfg", train_cfg, "target validity CFG (recorded for predict)");
  train_cmd->add_option("--steps", tcfg.steps, "gradient steps")->default_val(256);
  train_cmd->add_option("--lr", tcfg.lr, "learning rate")->default_val(1e-4);
  train_cmd->add_option("--seed", tcfg.seed, "rng seed")->default_val(0);
  train_cmd->add_option("--out", train_out, "output params file")->required();
  train_cmd->add_option("--d-enc", mcfg.d_enc, "encoder width")->default_val(64);
  train_cmd->add_option("--d", mcfg.d, "scorer hidden width")->default_val(256);

  // ---- predict / eval ----
  auto* predict_cmd = app.add_subcommand("predict", "run hybrid inference over a test set");
  InferenceArgs predict_args;
  add_inference_flags(predict_cmd, predict_args);
  auto* eval_cmd = app.add_subcommand("eval", "hybrid inference plus evaluation metrics");
  InferenceArgs eval_args;
  add_inference_flags(eval_cmd, eval_args);

  // ---- split ----
  auto* split_cmd = app.add_subcommand("split", "generate train/test splits");
  std::string split_in, split_kind, split_extractor = "funql", split_out_train, split_out_test,
              split_report, split_measure = "target";
  int split_order = 1, split_max_iterations = 1000;
  std::size_t split_train_size = 0, split_test_size = 0;
  std::uint64_t split_seed = 0;
  split_cmd->add_option("--in", split_in, "input TSV")->required();
  split_cmd->add_option("--kind", split_kind, "random | length | template | tmcd")->required();
  split_cmd->add_option("--extractor", split_extractor, "funql | tree | token")
      ->default_val("funql");
  split_cmd->add_option("--order", split_order, "compound order for tree extractors (1 or 2)")
      ->default_val(1);
  split_cmd->add_option("--train-size", split_train_size, "train example count");
  split_cmd->add_option("--test-size", split_test_size, "test example count");
  split_cmd->add_option("--seed", split_seed, "rng seed")->default_val(0);
  split_cmd->add_option("--max-iterations", split_max_iterations, "tmcd swap iterations")
      ->default_val(1000);
  split_cmd->add_option("--measure", split_measure, "length measure: source | target")
      ->default_val("target");
  split_cmd->add_option("--out-train", split_out_train, "train TSV path")->required();
  split_cmd->add_option("--out-test", split_out_test, "test TSV path")->required();
  split_cmd->add_option("--report", split_report, "split report JSON path");

  // ---- stats ----
  auto* stats_cmd = app.add_subcommand("stats", "grammar size statistics");
  std::string stats_grammar, stats_train, stats_report;
  stats_cmd->add_option("--grammar", stats_grammar, "grammar file")->required();
  stats_cmd->add_option("--train", stats_train, "dataset TSV")->required();
  stats_cmd->add_option("--report", stats_report, "stats JSON path");

  // ---- verify ----
  auto* verify_cmd = app.add_subcommand("verify", "validate a dataset and print its hash");
  std::string verify_in;
  bool verify_funql = false;
  verify_cmd->add_option("--in", verify_in, "dataset TSV")->required();
  verify_cmd->add_flag("--funql", verify_funql, "also require FunQL-parseable targets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  set_thread_count(threads);

  try {
    if (*induce_cmd) {
      log_config(induce_cmd);
      return cmd_induce(induce_train, induce_out, icfg, induce_trace);
    }

    if (*train_cmd) {
      log_config(train_cmd);
      log_input("grammar", train_grammar);
      log_input("train", train_tsv);
      const Grammar grammar = Grammar::load(train_grammar);
      const Dataset dataset = load_tsv(train_tsv);
      TrainResult result = train(grammar, dataset, tcfg, mcfg, true);
      if (!train_cfg.empty()) result.params.set_metadata("target_cfg", train_cfg);
      result.params.set_metadata("grammar_hash",
                                 std::to_string(file_hash(train_grammar)));
      result.params.save(train_out);
      std::cerr << "[nqg] trained " << tcfg.steps << " steps, dropped "
                << result.dropped_examples << " unreachable examples\n";
      return 0;
    }

    if (*predict_cmd || *eval_cmd) {
      const InferenceArgs& args = *predict_cmd ? predict_args : eval_args;
      log_config(*predict_cmd ? predict_cmd : eval_cmd);
      const InferenceOutput out = run_inference(args);
      std::vector<PerExampleRecord> records;
      EvalReport report = evaluate(out.gold, out.nqg, out.hybrid, &records);
      report.grammar_rule_count = out.grammar.size();
      report.rule_ratio = report.grammar_rule_count > 0
                              ? static_cast<double>(out.gold.size()) / report.grammar_rule_count
                              : 0;
      if (!args.per_example_path.empty()) write_per_example(args.per_example_path, records);
      if (!args.report_path.empty()) write_text(args.report_path, report.to_json() + "\n");
      if (*eval_cmd)
        std::cout << report.to_json() << std::endl;
      else
        std::cout << "{\"coverage\": " << report.coverage
                  << ", \"dataset_size\": " << report.dataset_size << "}" << std::endl;
      return 0;
    }

    if (*split_cmd) {
      log_config(split_cmd);
      log_input("in", split_in);
      const Dataset dataset = load_tsv(split_in);
      Extractor extractor;
      if (split_extractor == "funql")
        extractor.kind = ExtractorKind::funql_tree;
      else if (split_extractor == "tree")
        extractor.kind = ExtractorKind::bracketed_tree;
      else if (split_extractor == "token")
        extractor.kind = ExtractorKind::token;
      else
        throw std::invalid_argument("unknown extractor: " + split_extractor);
      extractor.order = split_order;

      if (split_train_size == 0 && split_test_size == 0) {
        split_train_size = dataset.size() / 2;
        split_test_size = dataset.size() - split_train_size;
      }

      SplitResult result;
      if (split_kind == "random") {
        result = random_split(dataset, split_train_size, split_test_size, split_seed, extractor);
      } else if (split_kind == "length") {
        const double fraction =
            static_cast<double>(split_test_size) / static_cast<double>(dataset.size());
        const LengthMeasure measure = split_measure == "source" ? LengthMeasure::source_tokens
                                                                : LengthMeasure::target_tokens;
        result = length_split(dataset, measure, fraction, extractor);
      } else if (split_kind == "template") {
        result = template_split(dataset, split_train_size, split_seed, extractor);
      } else if (split_kind == "tmcd") {
        TmcdConfig config;
        config.train_size = split_train_size;
        config.test_size = split_test_size;
        config.seed = split_seed;
        config.max_iterations = split_max_iterations;
        result = tmcd_split(dataset, extractor, config);
      } else {
        throw std::invalid_argument("unknown split kind: " + split_kind);
      }

      save_tsv(result.train, split_out_train);
      save_tsv(result.test, split_out_test);
      nlohmann::ordered_json j;
      j["divergence"] = result.divergence;
      j["atom_divergence_note"] =
          "atom divergence is replaced by the hard constraint; see missing_atom_fraction";
      j["missing_atom_fraction"] = result.missing_atom_fraction;
      j["sizes"] = {{"train", result.train.size()}, {"test", result.test.size()}};
      j["iterations"] = result.iterations;
      j["seed"] = result.seed;
      if (!result.note.empty()) j["note"] = result.note;
      if (!split_report.empty()) write_text(split_report, j.dump(2) + "\n");
      std::cout << j.dump(2) << std::endl;
      return 0;
    }

    if (*stats_cmd) {
      log_config(stats_cmd);
      log_input("grammar", stats_grammar);
      log_input("train", stats_train);
      const Grammar grammar = Grammar::load(stats_grammar);
      const Dataset dataset = load_tsv(stats_train);
      const GrammarStats s = grammar_stats(grammar, dataset);
      nlohmann::ordered_json j;
      j["examples"] = s.examples;
      j["rules"] = s.rules;
      j["ratio"] = s.ratio;
      if (!stats_report.empty()) write_text(stats_report, j.dump(2) + "\n");
      std::cout << j.dump(2) << std::endl;
      return 0;
    }

    if (*verify_cmd) {
      log_config(verify_cmd);
      const Dataset dataset = load_tsv(verify_in);
      std::cout << "examples: " << dataset.size() << "\n";
      std::cout << "hash: " << std::hex << dataset_hash(dataset) << std::dec << "\n";
      if (verify_funql) {
        const FunqlReport report = validate_funql(dataset);
        if (!report.ok()) {
          for (const FunqlFailure& f : report.failures)
            std::cerr << "example " << f.id << ": " << f.message << "\n";
          std::cerr << report.failures.size() << " targets failed to parse\n";
          return 2;
        }
        std::cout << "funql: ok\n";
      }
      return 0;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace nqg
