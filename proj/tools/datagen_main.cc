// Emits the built-in corpora (SCAN regenerated from its phrase grammar,
// the synthetic FunQL corpus) as TSV plus the matching target CFGs, so the
// full pipeline can be reproduced from the command line.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nqg/datagen.h"

int main(int argc, char** argv) {
  CLI::App app{"built-in dataset generator"};
  app.require_subcommand(1);

  auto* scan = app.add_subcommand("scan", "SCAN command language and its splits");
  std::string scan_split = "all", scan_out_train, scan_out_test, scan_out_cfg;
  scan->add_option("--split", scan_split, "all | jump | turn-left | length")->default_val("all");
  scan->add_option("--out-train", scan_out_train, "train TSV path");
  scan->add_option("--out-test", scan_out_test, "test TSV path");
  scan->add_option("--out-cfg", scan_out_cfg, "target CFG path");

  auto* synth = app.add_subcommand("funql", "synthetic FunQL corpus");
  nqg::SynthConfig cfg;
  std::string synth_out, synth_out_cfg, synth_out_grammar;
  synth->add_option("--size", cfg.size, "corpus size")->default_val(1000);
  synth->add_option("--seed", cfg.seed, "rng seed")->default_val(1);
  synth->add_option("--out", synth_out, "corpus TSV path")->required();
  synth->add_option("--out-cfg", synth_out_cfg, "target CFG path");
  synth->add_option("--out-grammar", synth_out_grammar, "generator grammar path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*scan) {
      if (scan_split == "all") {
        if (scan_out_train.empty()) throw std::runtime_error("--out-train is required");
        nqg::save_tsv(nqg::scan_dataset(), scan_out_train);
      } else {
        nqg::SplitFiles files;
        if (scan_split == "jump")
          files = nqg::scan_jump_split();
        else if (scan_split == "turn-left")
          files = nqg::scan_turn_left_split();
        else if (scan_split == "length")
          files = nqg::scan_length_split();
        else
          throw std::runtime_error("unknown scan split: " + scan_split);
        if (!scan_out_train.empty()) nqg::save_tsv(files.train, scan_out_train);
        if (!scan_out_test.empty()) nqg::save_tsv(files.test, scan_out_test);
        std::cerr << "[datagen] scan " << scan_split << ": " << files.train.size() << " train, "
                  << files.test.size() << " test\n";
      }
      if (!scan_out_cfg.empty()) nqg::scan_target_cfg().save(scan_out_cfg);
    }
    if (*synth) {
      const nqg::Dataset corpus = nqg::synth_funql_corpus(cfg);
      nqg::save_tsv(corpus, synth_out);
      if (!synth_out_cfg.empty()) nqg::synth_funql_target_cfg().save(synth_out_cfg);
      if (!synth_out_grammar.empty()) nqg::synth_funql_grammar().save(synth_out_grammar);
      std::cerr << "[datagen] funql corpus: " << corpus.size() << " examples\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
