#ifndef NQG_FUNQL_H
#define NQG_FUNQL_H

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nqg/symbol.h"

namespace nqg {

// Rooted ordered function tree, the shared shape behind the FunQL and
// generic bracketed-tree extractors.
struct TreeNode {
  std::string label;
  std::vector<TreeNode> children;

  bool is_leaf() const { return children.empty(); }
};

struct TreeParseError : std::runtime_error {
  TreeParseError(std::size_t position, const std::string& message)
      : std::runtime_error("token " + std::to_string(position) + ": " + message),
        position(position) {}
  std::size_t position;
};

// FunQL style: `f ( a , g ( b ) )`, leaves are bare symbols.
TreeNode parse_funql(std::span<const Token> tokens);
TreeNode parse_funql(std::span<const std::string> tokens);

// Generic bracketed style: `( f a ( g b ) )`, first element labels the node.
TreeNode parse_bracketed(std::span<const Token> tokens);
TreeNode parse_bracketed(std::span<const std::string> tokens);

std::string tree_str(const TreeNode& node);

}  // namespace nqg

#endif
