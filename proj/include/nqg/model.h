#ifndef NQG_MODEL_H
#define NQG_MODEL_H

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nqg/dataset.h"
#include "nqg/forest.h"
#include "nqg/grammar.h"
#include "nqg/target_cfg.h"
#include "nqg/tensor.h"

namespace nqg {

// Anchored rule scores phi(r, i, j) = f_s([w_i, w_j]) + e_r' f_r([w_i, w_j])
// over per-token context vectors w from a trainable span encoder: a token
// embedding table mixed through one position-aware layer (window-3 context
// plus sinusoidal position features, tanh).
struct ModelConfig {
  int d_enc = 64;   // encoder output width
  int d = 256;      // scorer hidden width and rule-embedding width
  int pos_dim = 16; // sinusoidal position feature width
};

struct TrainConfig {
  int steps = 256;
  double lr = 1e-4;
  std::uint64_t seed = 0;
};

// Per-token context vectors for one source; row i is w_i.
struct SpanEncoding {
  std::size_t len = 0;
  std::size_t dim = 0;
  std::vector<double> w;  // len x dim, row-major
  std::vector<std::size_t> token_rows;  // embedding row per position

  const double* row(std::size_t i) const { return w.data() + i * dim; }
};

class ModelParams {
 public:
  ModelParams() = default;
  // Fresh parameters for a grammar: rule embeddings per rule id, embedding
  // rows for the sorted union of grammar and dataset tokens (row 0 is the
  // unknown token). All weights uniform(-0.1, 0.1) from the seed.
  static ModelParams init(const Grammar& grammar, const Dataset& dataset,
                          const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::size_t rule_count() const { return rule_count_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  std::size_t embedding_row(Token token) const;  // 0 when unseen

  Tensor& tensor(const std::string& name);
  const Tensor& tensor(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& tensors() const { return tensors_; }

  // Zero-valued clone, for gradients.
  ModelParams like_zeros() const;
  void axpy(double a, const ModelParams& other);  // this += a * other
  void zero();

  // Versioned JSON container with named tensors.
  void save(const std::string& path) const;
  static ModelParams load(const std::string& path);
  std::string to_json() const;
  static ModelParams from_json(const std::string& text);

  std::string metadata(const std::string& key) const;
  void set_metadata(const std::string& key, const std::string& value);

 private:
  ModelConfig config_;
  std::size_t rule_count_ = 0;
  std::vector<std::string> vocab_;
  std::map<std::string, std::string> metadata_;
  std::vector<std::pair<std::string, Tensor>> tensors_;
  std::map<std::string, std::size_t> tensor_index_;
  std::map<std::string, std::size_t> vocab_index_;

  void add_tensor(const std::string& name, Tensor t);
  void rebuild_vocab_index();
};

SpanEncoding encode_source(const ModelParams& params, std::span<const Token> source);

// phi(r, i, j, x) for inclusive token positions 0 <= i <= j < |x|.
double score_anchored_rule(const ModelParams& params, std::size_t rule, std::size_t i,
                           std::size_t j, const SpanEncoding& enc);

// Sum of phi over the derivation's anchored rule applications.
double derivation_score(const ModelParams& params, const Grammar& grammar, const Derivation& d,
                        const SpanEncoding& enc);

// log sum over forest derivations of exp(score). Returns -infinity for a
// rootless forest.
double log_marginal(const ParseForest& forest, const ModelParams& params,
                    const SpanEncoding& enc);

// MML loss -log p(y|x) = logZ(full) - logZ(constrained), with analytic
// gradients accumulated into `grads` when non-null. The constrained forest
// must be parseable.
double mml_loss(const ModelParams& params, const ParseForest& constrained,
                const ParseForest& full, const SpanEncoding& enc, ModelParams* grads = nullptr);

struct ExampleForests {
  ParseForest full;
  ParseForest constrained;
  bool reachable = false;  // gold target derivable
};

// Forest precomputation, parallel over examples, plus the serial reference.
std::vector<ExampleForests> build_forests(const Grammar& grammar, const Dataset& dataset);
std::vector<ExampleForests> build_forests_serial(const Grammar& grammar, const Dataset& dataset);

struct TrainResult {
  ModelParams params;
  std::size_t dropped_examples = 0;  // gold unreachable under the grammar
  std::vector<double> losses;        // per-step training loss
};

TrainResult train(const Grammar& grammar, const Dataset& dataset, const TrainConfig& tc,
                  const ModelConfig& mc, bool verbose = false);

struct Prediction {
  std::optional<std::vector<Token>> target;  // empty = abstain
  double score = 0;
  bool parsed = false;

  bool abstained() const { return !target.has_value(); }
};

// Max-score derivation via Viterbi over the source chart; emits its target
// iff the validity CFG accepts it. Score ties prefer the lexicographically
// smallest target.
Prediction predict(const Grammar& grammar, const ModelParams& params, const TargetCfg& cfg,
                   std::span<const Token> source);

}  // namespace nqg

#endif
