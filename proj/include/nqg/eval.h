#ifndef NQG_EVAL_H
#define NQG_EVAL_H

#include <optional>
#include <string>
#include <vector>

#include "nqg/dataset.h"
#include "nqg/grammar.h"

namespace nqg {

// The pluggable predictor consulted when the grammar-based parser
// abstains: a predictions file, an external command fed source lines on
// stdin, or the degenerate echo baseline.
class FallbackPredictor {
 public:
  // TSV of `source<TAB>prediction`. Must cover every evaluation source;
  // missing coverage is a hard error at load.
  static FallbackPredictor from_file(const std::string& path,
                                     const std::vector<std::vector<Token>>& required_sources);
  // Batch command: source lines on stdin, one prediction line per source.
  static FallbackPredictor from_command(const std::string& command);
  static FallbackPredictor echo();

  std::vector<std::vector<Token>> predict(
      const std::vector<std::vector<Token>>& sources) const;

 private:
  enum class Kind { file, command, echo_kind };
  Kind kind_ = Kind::echo_kind;
  std::string command_;
  std::vector<std::pair<std::vector<Token>, std::vector<Token>>> table_;
};

// NQG output when one is produced, the fallback output otherwise.
std::vector<Token> hybrid_predict(const std::optional<std::vector<Token>>& nqg_output,
                                  const std::vector<Token>& fallback_output);

struct EvalReport {
  double exact_match = 0;  // hybrid (final) accuracy
  double coverage = 0;     // fraction of examples with an NQG output
  std::optional<double> precision;  // correct among NQG outputs; null at zero coverage
  std::size_t dataset_size = 0;
  std::size_t nqg_output_count = 0;
  std::size_t nqg_correct_count = 0;
  std::size_t hybrid_correct_count = 0;
  std::size_t grammar_rule_count = 0;
  double rule_ratio = 0;

  std::string to_json() const;
};

struct PerExampleRecord {
  std::int32_t id = 0;
  std::string source;
  std::string gold;
  std::optional<std::string> nqg;
  std::string hybrid;
  bool nqg_correct = false;
  bool hybrid_correct = false;
};

// Exact match is token-sequence equality. Predictions align with the gold
// dataset by position; a size mismatch is an error.
EvalReport evaluate(const Dataset& gold,
                    const std::vector<std::optional<std::vector<Token>>>& nqg_predictions,
                    const std::vector<std::vector<Token>>& hybrid_predictions,
                    std::vector<PerExampleRecord>* per_example = nullptr);

struct GrammarStats {
  std::size_t examples = 0;
  std::size_t rules = 0;
  double ratio = 0;  // examples / rules
};
GrammarStats grammar_stats(const Grammar& grammar, const Dataset& dataset);

}  // namespace nqg

#endif
