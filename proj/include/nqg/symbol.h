#ifndef NQG_SYMBOL_H
#define NQG_SYMBOL_H

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nqg {

// Tokens are whitespace-delimited strings interned into a process-wide
// append-only table. Interning is thread-safe, but parallel kernels never
// intern new tokens, so token ids are a deterministic function of the
// inputs read so far.
using Token = std::int32_t;

Token intern_token(std::string_view text);
const std::string& token_text(Token id);
std::vector<Token> intern_tokens(std::string_view whitespace_delimited);
std::string tokens_text(std::span<const Token> tokens);

// A grammar symbol: either a terminal (an interned token) or a linked
// nonterminal carrying a positive index. Terminals have text and no index,
// nonterminals the reverse.
class Symbol {
 public:
  Symbol() : value_(0) {}

  static Symbol terminal(Token t) { return Symbol(t); }
  static Symbol terminal(std::string_view text) { return Symbol(intern_token(text)); }
  static Symbol nonterminal(int index);

  bool is_terminal() const { return value_ >= 0; }
  bool is_nonterminal() const { return value_ < 0; }
  Token token() const;             // terminal only
  const std::string& text() const; // terminal only
  int index() const;               // nonterminal only

  std::int32_t raw() const { return value_; }

  friend bool operator==(Symbol a, Symbol b) { return a.value_ == b.value_; }
  friend bool operator!=(Symbol a, Symbol b) { return a.value_ != b.value_; }
  friend bool operator<(Symbol a, Symbol b) { return a.value_ < b.value_; }

 private:
  explicit Symbol(std::int32_t v) : value_(v) {}
  std::int32_t value_;
};

using SymbolSeq = std::vector<Symbol>;

// Text form: terminals verbatim, nonterminals as NT_<index>. NT_<digits>
// is reserved and never a terminal.
std::string format_symbol(Symbol s);
std::string format_symbols(std::span<const Symbol> seq);
bool is_reserved_token_text(std::string_view text);
SymbolSeq parse_symbols(std::string_view text);
SymbolSeq to_symbols(std::span<const Token> tokens);

}  // namespace nqg

template <>
struct std::hash<nqg::Symbol> {
  std::size_t operator()(nqg::Symbol s) const noexcept {
    return std::hash<std::int32_t>()(s.raw());
  }
};

#endif
