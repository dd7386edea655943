#include "nqg/target_cfg.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nqg {

TargetCfg::TargetCfg(std::vector<Production> productions) : productions_(std::move(productions)) {
  if (productions_.empty()) throw std::invalid_argument("target CFG needs at least one production");
  start_ = productions_[0].lhs;
  for (std::size_t i = 0; i < productions_.size(); ++i)
    by_lhs_[productions_[i].lhs].push_back(i);
  // nullable closure, for the standard Earley empty-rule completion fix
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : productions_) {
      if (nullable_.count(p.lhs)) continue;
      bool all = true;
      for (const auto& s : p.rhs)
        if (!nullable_.count(s)) {
          all = false;
          break;
        }
      if (all) {
        nullable_.insert(p.lhs);
        changed = true;
      }
    }
  }
}

TargetCfg TargetCfg::parse_text(std::string_view text) {
  std::vector<Production> productions;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw std::invalid_argument("target CFG line " + std::to_string(line_no) +
                                  ": missing '->'");
    Production p;
    {
      std::istringstream lhs(line.substr(0, arrow));
      if (!(lhs >> p.lhs))
        throw std::invalid_argument("target CFG line " + std::to_string(line_no) +
                                    ": missing left-hand side");
      std::string extra;
      if (lhs >> extra)
        throw std::invalid_argument("target CFG line " + std::to_string(line_no) +
                                    ": left-hand side must be a single symbol");
    }
    std::istringstream rhs(line.substr(arrow + 2));
    std::string tok;
    while (rhs >> tok) p.rhs.push_back(tok);
    productions.push_back(std::move(p));
  }
  return TargetCfg(std::move(productions));
}

TargetCfg TargetCfg::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open target CFG file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

std::string TargetCfg::to_text() const {
  std::string out;
  for (const auto& p : productions_) {
    out += p.lhs + " ->";
    for (const auto& s : p.rhs) out += " " + s;
    out += '\n';
  }
  return out;
}

void TargetCfg::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write target CFG file: " + path);
  out << to_text();
}

bool TargetCfg::accepts(std::span<const Token> target) const {
  std::vector<std::string> words;
  words.reserve(target.size());
  for (Token t : target) words.push_back(token_text(t));
  return accepts(std::span<const std::string>(words));
}

bool TargetCfg::accepts(std::span<const std::string> target) const {
  if (productions_.empty()) return false;
  const std::size_t n = target.size();

  struct Item {
    std::size_t prod;
    std::size_t dot;
    std::size_t origin;
    bool operator==(const Item&) const = default;
  };
  std::vector<std::vector<Item>> chart(n + 1);

  auto push = [&](std::size_t k, Item item) {
    for (const Item& it : chart[k])
      if (it == item) return false;
    chart[k].push_back(item);
    return true;
  };

  for (std::size_t pi : by_lhs_.count(start_) ? by_lhs_.at(start_) : std::vector<std::size_t>{})
    push(0, {pi, 0, 0});

  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t idx = 0; idx < chart[k].size(); ++idx) {
      const Item item = chart[k][idx];
      const Production& p = productions_[item.prod];
      if (item.dot < p.rhs.size()) {
        const std::string& sym = p.rhs[item.dot];
        auto lhs_it = by_lhs_.find(sym);
        if (lhs_it != by_lhs_.end()) {
          // predict
          for (std::size_t pi : lhs_it->second) push(k, {pi, 0, k});
          // nullable shortcut
          if (nullable_.count(sym)) push(k, {item.prod, item.dot + 1, item.origin});
        } else if (k < n && target[k] == sym) {
          // scan
          push(k + 1, {item.prod, item.dot + 1, item.origin});
        }
      } else {
        // complete
        const std::string& lhs = p.lhs;
        for (std::size_t pidx = 0; pidx < chart[item.origin].size(); ++pidx) {
          const Item parent = chart[item.origin][pidx];
          const Production& pp = productions_[parent.prod];
          if (parent.dot < pp.rhs.size() && pp.rhs[parent.dot] == lhs)
            push(k, {parent.prod, parent.dot + 1, parent.origin});
        }
      }
    }
  }

  for (const Item& item : chart[n]) {
    const Production& p = productions_[item.prod];
    if (p.lhs == start_ && item.origin == 0 && item.dot == p.rhs.size()) return true;
  }
  return false;
}

}  // namespace nqg
