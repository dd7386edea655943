#ifndef NQG_DATASET_H
#define NQG_DATASET_H

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nqg/symbol.h"

namespace nqg {

// A source/target token-sequence pair. Ids are dense ordinals within the
// owning dataset.
struct Example {
  std::vector<Token> source;
  std::vector<Token> target;
  std::int32_t id = 0;

  friend bool operator==(const Example& a, const Example& b) {
    return a.source == b.source && a.target == b.target;
  }
};

struct Dataset {
  std::vector<Example> examples;
  std::string provenance;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// TSV contract: one example per line, `source<TAB>target`, tokens
// whitespace-split. Missing tab, extra tabs, or empty fields are errors
// reported with their line number. Blank lines are skipped.
Dataset parse_tsv(std::string_view text, const std::string& provenance);
Dataset load_tsv(const std::string& path);
void save_tsv(const Dataset& dataset, const std::string& path);
std::string dataset_tsv(const Dataset& dataset);

// SCAN command files: `IN: <source> OUT: <target>` lines. Plain TSV is
// also accepted.
Dataset load_scan(const std::string& path);
Dataset parse_scan(std::string_view text, const std::string& provenance);

// Rebuilds dense ids after any reordering or filtering.
void renumber(Dataset& dataset);

// 64-bit FNV-1a over the canonical TSV serialization.
std::uint64_t dataset_hash(const Dataset& dataset);
std::uint64_t fnv1a64(std::string_view text);

struct FunqlFailure {
  std::int32_t id;
  std::size_t position;
  std::string message;
};
struct FunqlReport {
  std::vector<FunqlFailure> failures;
  bool ok() const { return failures.empty(); }
};
// Checks that every target parses as a FunQL function tree.
FunqlReport validate_funql(const Dataset& dataset);

}  // namespace nqg

#endif
