#ifndef NQG_TARGET_CFG_H
#define NQG_TARGET_CFG_H

#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nqg/symbol.h"

namespace nqg {

// A context-free grammar over target tokens, used as the validity filter
// at inference time. Text format: one production per line, `LHS -> rhs
// tokens`; a symbol is a nonterminal iff it appears as some LHS; the start
// symbol is the LHS of the first line. Membership is decided with an
// Earley recognizer (handles empty right-hand sides and unary chains).
class TargetCfg {
 public:
  struct Production {
    std::string lhs;
    std::vector<std::string> rhs;
  };

  TargetCfg() = default;
  explicit TargetCfg(std::vector<Production> productions);

  static TargetCfg parse_text(std::string_view text);
  static TargetCfg load(const std::string& path);
  std::string to_text() const;
  void save(const std::string& path) const;

  bool empty() const { return productions_.empty(); }
  const std::string& start() const { return start_; }
  const std::vector<Production>& productions() const { return productions_; }

  bool accepts(std::span<const Token> target) const;
  bool accepts(std::span<const std::string> target) const;

 private:
  std::vector<Production> productions_;
  std::string start_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_lhs_;
  std::unordered_set<std::string> nullable_;
};

}  // namespace nqg

#endif
