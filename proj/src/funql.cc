#include "nqg/funql.h"

namespace nqg {

namespace {

struct FunqlParser {
  std::span<const std::string> toks;
  std::size_t pos = 0;

  const std::string& peek() const {
    if (pos >= toks.size()) throw TreeParseError(pos, "unexpected end of input");
    return toks[pos];
  }
  bool done() const { return pos >= toks.size(); }

  // expr := SYMBOL [ '(' expr (',' expr)* ')' ]
  TreeNode expr() {
    const std::string& head = peek();
    if (head == "(" || head == ")" || head == ",")
      throw TreeParseError(pos, "expected a symbol, got '" + head + "'");
    TreeNode node;
    node.label = head;
    ++pos;
    if (!done() && toks[pos] == "(") {
      ++pos;
      node.children.push_back(expr());
      while (!done() && toks[pos] == ",") {
        ++pos;
        node.children.push_back(expr());
      }
      if (done() || toks[pos] != ")")
        throw TreeParseError(pos, "expected ')' to close '" + node.label + "'");
      ++pos;
    }
    return node;
  }
};

struct BracketedParser {
  std::span<const std::string> toks;
  std::size_t pos = 0;

  // expr := SYMBOL | '(' SYMBOL expr* ')'
  TreeNode expr() {
    if (pos >= toks.size()) throw TreeParseError(pos, "unexpected end of input");
    if (toks[pos] != "(") {
      if (toks[pos] == ")") throw TreeParseError(pos, "unexpected ')'");
      TreeNode leaf;
      leaf.label = toks[pos++];
      return leaf;
    }
    ++pos;
    if (pos >= toks.size() || toks[pos] == "(" || toks[pos] == ")")
      throw TreeParseError(pos, "expected a node label after '('");
    TreeNode node;
    node.label = toks[pos++];
    while (pos < toks.size() && toks[pos] != ")") node.children.push_back(expr());
    if (pos >= toks.size()) throw TreeParseError(pos, "expected ')' to close '" + node.label + "'");
    ++pos;
    return node;
  }
};

std::vector<std::string> to_strings(std::span<const Token> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (Token t : tokens) out.push_back(token_text(t));
  return out;
}

}  // namespace

TreeNode parse_funql(std::span<const std::string> tokens) {
  FunqlParser p{tokens};
  TreeNode root = p.expr();
  if (!p.done()) throw TreeParseError(p.pos, "trailing tokens after expression");
  return root;
}

TreeNode parse_funql(std::span<const Token> tokens) {
  const auto words = to_strings(tokens);
  return parse_funql(std::span<const std::string>(words));
}

TreeNode parse_bracketed(std::span<const std::string> tokens) {
  BracketedParser p{tokens};
  TreeNode root = p.expr();
  if (p.pos != tokens.size()) throw TreeParseError(p.pos, "trailing tokens after expression");
  return root;
}

TreeNode parse_bracketed(std::span<const Token> tokens) {
  const auto words = to_strings(tokens);
  return parse_bracketed(std::span<const std::string>(words));
}

std::string tree_str(const TreeNode& node) {
  if (node.is_leaf()) return node.label;
  std::string out = node.label + "(";
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (i) out += ",";
    out += tree_str(node.children[i]);
  }
  out += ")";
  return out;
}

}  // namespace nqg
