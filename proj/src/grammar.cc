#include "nqg/grammar.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nqg {

Grammar::Grammar(std::vector<Rule> rules) {
  rules_.reserve(rules.size());
  for (auto& r : rules) {
    if (index_.count(r)) continue;
    index_.emplace(r, rules_.size());
    rules_.push_back(std::move(r));
  }
}

std::optional<std::size_t> Grammar::find(const Rule& r) const {
  auto it = index_.find(r);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Grammar Grammar::parse_text(std::string_view text, const RuleLimits& limits) {
  std::vector<Rule> rules;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line =
        text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    ++line_no;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#') continue;
    try {
      rules.push_back(Rule::parse(line, limits));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("grammar line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return Grammar(std::move(rules));
}

std::string Grammar::to_text() const {
  std::string out;
  for (const Rule& r : rules_) {
    out += r.str();
    out += '\n';
  }
  return out;
}

Grammar Grammar::load(const std::string& path, const RuleLimits& limits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open grammar file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), limits);
}

void Grammar::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write grammar file: " + path);
  out << to_text();
}

}  // namespace nqg
