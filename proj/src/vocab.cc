#include "nqg/symbol.h"

#include <cctype>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>

namespace nqg {

namespace {

struct VocabTable {
  std::shared_mutex mutex;
  std::unordered_map<std::string_view, Token> ids;
  std::deque<std::string> texts;  // stable addresses back the string_view keys
};

VocabTable& vocab() {
  static VocabTable* table = new VocabTable();
  return *table;
}

}  // namespace

Token intern_token(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("cannot intern an empty token");
  VocabTable& v = vocab();
  {
    std::shared_lock lock(v.mutex);
    auto it = v.ids.find(text);
    if (it != v.ids.end()) return it->second;
  }
  std::unique_lock lock(v.mutex);
  auto it = v.ids.find(text);
  if (it != v.ids.end()) return it->second;
  v.texts.emplace_back(text);
  const Token id = static_cast<Token>(v.texts.size() - 1);
  v.ids.emplace(v.texts.back(), id);
  return id;
}

const std::string& token_text(Token id) {
  VocabTable& v = vocab();
  std::shared_lock lock(v.mutex);
  if (id < 0 || static_cast<std::size_t>(id) >= v.texts.size())
    throw std::out_of_range("unknown token id");
  return v.texts[static_cast<std::size_t>(id)];
}

std::vector<Token> intern_tokens(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(intern_token(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::string tokens_text(std::span<const Token> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += token_text(tokens[i]);
  }
  return out;
}

Symbol Symbol::nonterminal(int index) {
  if (index < 1) throw std::invalid_argument("nonterminal index must be positive");
  return Symbol(-index);
}

Token Symbol::token() const {
  if (!is_terminal()) throw std::logic_error("token() on a nonterminal");
  return value_;
}

const std::string& Symbol::text() const { return token_text(token()); }

int Symbol::index() const {
  if (!is_nonterminal()) throw std::logic_error("index() on a terminal");
  return -value_;
}

bool is_reserved_token_text(std::string_view text) {
  if (text == "###") return true;
  if (text.size() < 4 || text.substr(0, 3) != "NT_") return false;
  for (std::size_t i = 3; i < text.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
  return true;
}

std::string format_symbol(Symbol s) {
  if (s.is_terminal()) return s.text();
  return "NT_" + std::to_string(s.index());
}

std::string format_symbols(std::span<const Symbol> seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += format_symbol(seq[i]);
  }
  return out;
}

SymbolSeq parse_symbols(std::string_view text) {
  SymbolSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      const std::string_view tok = text.substr(i, j - i);
      if (tok.size() > 3 && tok.substr(0, 3) == "NT_") {
        bool digits = true;
        for (std::size_t k = 3; k < tok.size(); ++k)
          if (!std::isdigit(static_cast<unsigned char>(tok[k]))) digits = false;
        if (digits) {
          out.push_back(Symbol::nonterminal(std::stoi(std::string(tok.substr(3)))));
          i = j;
          continue;
        }
      }
      if (tok == "###") throw std::invalid_argument("'###' is reserved and cannot be a terminal");
      out.push_back(Symbol::terminal(tok));
    }
    i = j;
  }
  return out;
}

SymbolSeq to_symbols(std::span<const Token> tokens) {
  SymbolSeq out;
  out.reserve(tokens.size());
  for (Token t : tokens) out.push_back(Symbol::terminal(t));
  return out;
}

}  // namespace nqg
