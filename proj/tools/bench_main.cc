// Compares the serial reference kernels against the OpenMP paths: batch
// forest building, compound-profile construction, batch prediction, and a
// short induction run. Outputs agree bit-for-bit; only the wall time
// differs.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "nqg/datagen.h"
#include "nqg/eval.h"
#include "nqg/induction.h"
#include "nqg/model.h"
#include "nqg/parallel.h"
#include "nqg/splits.h"

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto end = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(end - start).count();
}

void row(const char* name, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-24s %10.1f ms %10.1f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0, equal ? "outputs equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel benchmark"};
  int threads = 0;
  std::size_t corpus_size = 600;
  int repeats = 3;
  app.add_option("--threads", threads, "parallel worker count (0 = all cores)")->default_val(0);
  app.add_option("--size", corpus_size, "synthetic corpus size")->default_val(600);
  app.add_option("--repeats", repeats, "timing repeats, best-of")->default_val(3);
  CLI11_PARSE(app, argc, argv);

  nqg::SynthConfig cfg;
  cfg.size = corpus_size;
  const nqg::Dataset corpus = nqg::synth_funql_corpus(cfg);
  const nqg::Grammar grammar = nqg::synth_funql_grammar();
  std::printf("corpus: %zu examples, grammar: %zu rules, threads: %d\n", corpus.size(),
              grammar.size(), threads == 0 ? nqg::effective_threads() : threads);
  std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  auto best_of = [&](const std::function<void()>& fn) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) best = std::min(best, time_ms(fn));
    return best;
  };

  // batch forest building
  {
    std::vector<nqg::ExampleForests> serial_out, parallel_out;
    const double s = best_of([&] { serial_out = nqg::build_forests_serial(grammar, corpus); });
    nqg::set_thread_count(threads);
    const double p = best_of([&] { parallel_out = nqg::build_forests(grammar, corpus); });
    nqg::set_thread_count(1);
    bool equal = serial_out.size() == parallel_out.size();
    for (std::size_t i = 0; equal && i < serial_out.size(); ++i) {
      equal = serial_out[i].reachable == parallel_out[i].reachable &&
              serial_out[i].full.nodes.size() == parallel_out[i].full.nodes.size() &&
              serial_out[i].constrained.nodes.size() == parallel_out[i].constrained.nodes.size();
    }
    row("forest-build", s, p, equal);
  }

  // compound profiles
  {
    nqg::Extractor extractor;
    nqg::CompoundProfile serial_out, parallel_out;
    const double s = best_of([&] { serial_out = nqg::build_profile_serial(corpus, extractor); });
    nqg::set_thread_count(threads);
    const double p = best_of([&] { parallel_out = nqg::build_profile(corpus, extractor); });
    nqg::set_thread_count(1);
    const bool equal = serial_out.compound_freqs == parallel_out.compound_freqs &&
                       serial_out.atom_freqs == parallel_out.atom_freqs;
    row("compound-profile", s, p, equal);
  }

  // batch prediction with fresh parameters
  {
    const nqg::ModelConfig mc{32, 64, 8};
    const nqg::ModelParams params = nqg::ModelParams::init(grammar, corpus, mc, 7);
    const nqg::TargetCfg cfg2 = nqg::synth_funql_target_cfg();
    std::vector<std::string> serial_out(corpus.size()), parallel_out(corpus.size());
    auto run = [&](std::vector<std::string>& out) {
      nqg::parallel_for(corpus.size(), [&](std::size_t i) {
        const auto p = nqg::predict(grammar, params, cfg2,
                                    std::span<const nqg::Token>(corpus.examples[i].source));
        out[i] = p.abstained() ? std::string("<abstain>") : nqg::tokens_text(*p.target);
      });
    };
    nqg::set_thread_count(1);
    const double s = best_of([&] { run(serial_out); });
    nqg::set_thread_count(threads);
    const double p = best_of([&] { run(parallel_out); });
    nqg::set_thread_count(1);
    row("batch-predict", s, p, serial_out == parallel_out);
  }

  // short induction run (candidate scoring dominates)
  {
    nqg::Dataset small;
    small.provenance = corpus.provenance;
    for (std::size_t i = 0; i < std::min<std::size_t>(120, corpus.size()); ++i)
      small.examples.push_back(corpus.examples[i]);
    nqg::InductionConfig icfg;
    icfg.max_examples = 120;
    icfg.max_steps = 8;
    std::string serial_text, parallel_text;
    nqg::set_thread_count(1);
    const double s = time_ms([&] { serial_text = nqg::induce(small, icfg).grammar.to_text(); });
    nqg::set_thread_count(threads);
    const double p = time_ms([&] { parallel_text = nqg::induce(small, icfg).grammar.to_text(); });
    nqg::set_thread_count(1);
    row("induce-8-steps", s, p, serial_text == parallel_text);
  }

  return 0;
}
