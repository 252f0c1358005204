#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vtrace::cfront {

enum class NodeKind {
  // Declarations
  FunctionDef,
  ParamList,
  Param,
  Decl,
  Declarator,
  TypeName,
  // Statements
  Compound,
  ExprStmt,
  If,
  While,
  DoWhile,
  For,
  Switch,
  Case,
  Default,
  Break,
  Continue,
  Return,
  Goto,
  Label,
  Empty,
  Unknown,
  Inlined,
  // Expressions
  Identifier,
  Number,
  String,
  Char,
  Binary,
  Assign,
  Unary,
  Postfix,
  Conditional,
  Call,
  Index,
  Member,
  Cast,
  Sizeof,
  Comma,
  InitList,
};

std::string_view kind_name(NodeKind kind);
bool is_statement_kind(NodeKind kind);

struct SourceSpan {
  int begin_line = 0;
  int begin_col = 0;
  int end_line = 0;
  int end_col = 0;

  bool contains_line(int line) const { return begin_line <= line && line <= end_line; }
  bool operator==(const SourceSpan&) const = default;
};

// One syntax tree node. `text` holds the token spelling for leaves and the
// operator or keyword for interior nodes that have one.
struct Node {
  NodeKind kind = NodeKind::Empty;
  std::string text;
  SourceSpan span;
  std::vector<Node> children;

  Node() = default;
  Node(NodeKind k, std::string t, SourceSpan s, std::vector<Node> c = {})
      : kind(k), text(std::move(t)), span(s), children(std::move(c)) {}

  bool is_leaf() const { return children.empty(); }

  // Label used for sequence comparison: token text for leaves, the kind
  // (operators spell their kind) for interior nodes.
  std::string label() const;

  bool operator==(const Node& other) const;
};

struct SyntaxTree {
  std::optional<Node> root;

  bool empty() const { return !root.has_value(); }
};

std::size_t node_count(const Node& node);
std::size_t node_count(const SyntaxTree& tree);

// Pre-order S-expression of labels. Two subtrees have the same key iff they
// are structurally identical modulo spans.
std::string structural_key(const Node& node);

// Renders an expression or statement back to compact C-like text. Used for
// reports and diagnostics, not for round-tripping.
std::string to_source(const Node& node);

void visit_preorder(const Node& node, const std::function<void(const Node&)>& fn);

bool contains_kind(const Node& node, NodeKind kind);

// True for operands whose evaluation can have side effects: calls,
// assignments and increments.
bool has_side_effects(const Node& node);

// Collects every statement node (any depth) of a function or statement tree.
std::vector<const Node*> collect_statements(const Node& root);

// Returns a copy of a statement where nested statement bodies are dropped,
// keeping only the header (condition / loop control) of control statements.
Node statement_header(const Node& stmt);

}  // namespace vtrace::cfront
