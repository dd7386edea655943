#ifndef NQG_GRAMMAR_H
#define NQG_GRAMMAR_H

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nqg/rule.h"

namespace nqg {

// A QCFG over the single nonterminal NT: a deduplicated rule set with
// stable ids in insertion order. Immutable after construction; safe to
// share across threads.
class Grammar {
 public:
  Grammar() = default;
  explicit Grammar(std::vector<Rule> rules);

  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }
  const std::vector<Rule>& rules() const { return rules_; }
  const Rule& rule(std::size_t id) const { return rules_[id]; }
  std::optional<std::size_t> find(const Rule& r) const;

  // Text format: one rule per line, `<source> ### <target>`, UTF-8.
  // Blank lines and '#'-prefixed comment lines are ignored.
  static Grammar parse_text(std::string_view text, const RuleLimits& limits = {});
  std::string to_text() const;
  static Grammar load(const std::string& path, const RuleLimits& limits = {});
  void save(const std::string& path) const;

 private:
  std::vector<Rule> rules_;
  std::unordered_map<Rule, std::size_t, RuleHash> index_;
};

}  // namespace nqg

#endif
