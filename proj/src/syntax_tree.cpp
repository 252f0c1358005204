#include "vtrace/syntax_tree.hpp"

namespace vtrace::cfront {

std::string_view kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::FunctionDef: return "function";
    case NodeKind::ParamList: return "params";
    case NodeKind::Param: return "param";
    case NodeKind::Decl: return "decl";
    case NodeKind::Declarator: return "declarator";
    case NodeKind::TypeName: return "type";
    case NodeKind::Compound: return "block";
    case NodeKind::ExprStmt: return "expr";
    case NodeKind::If: return "if";
    case NodeKind::While: return "while";
    case NodeKind::DoWhile: return "do";
    case NodeKind::For: return "for";
    case NodeKind::Switch: return "switch";
    case NodeKind::Case: return "case";
    case NodeKind::Default: return "default";
    case NodeKind::Break: return "break";
    case NodeKind::Continue: return "continue";
    case NodeKind::Return: return "return";
    case NodeKind::Goto: return "goto";
    case NodeKind::Label: return "label";
    case NodeKind::Empty: return "empty";
    case NodeKind::Unknown: return "unknown";
    case NodeKind::Inlined: return "inlined";
    case NodeKind::Identifier: return "id";
    case NodeKind::Number: return "num";
    case NodeKind::String: return "str";
    case NodeKind::Char: return "chr";
    case NodeKind::Binary: return "binary";
    case NodeKind::Assign: return "assign";
    case NodeKind::Unary: return "unary";
    case NodeKind::Postfix: return "postfix";
    case NodeKind::Conditional: return "?:";
    case NodeKind::Call: return "call";
    case NodeKind::Index: return "[]";
    case NodeKind::Member: return "member";
    case NodeKind::Cast: return "cast";
    case NodeKind::Sizeof: return "sizeof";
    case NodeKind::Comma: return ",";
    case NodeKind::InitList: return "{}";
  }
  return "?";
}

bool is_statement_kind(NodeKind kind) {
  switch (kind) {
    case NodeKind::Decl:
    case NodeKind::Compound:
    case NodeKind::ExprStmt:
    case NodeKind::If:
    case NodeKind::While:
    case NodeKind::DoWhile:
    case NodeKind::For:
    case NodeKind::Switch:
    case NodeKind::Case:
    case NodeKind::Default:
    case NodeKind::Break:
    case NodeKind::Continue:
    case NodeKind::Return:
    case NodeKind::Goto:
    case NodeKind::Label:
    case NodeKind::Empty:
    case NodeKind::Unknown:
    case NodeKind::Inlined:
      return true;
    default:
      return false;
  }
}

std::string Node::label() const {
  switch (kind) {
    case NodeKind::Identifier:
    case NodeKind::Number:
    case NodeKind::String:
    case NodeKind::Char:
    case NodeKind::TypeName:
      return text;
    case NodeKind::Binary:
    case NodeKind::Assign:
    case NodeKind::Member:
      return text;
    case NodeKind::Unary:
      // Prefix forms of operators that also exist as binary operators get a
      // marker so `-x` and `a - b` do not share a label.
      if (text == "-" || text == "+" || text == "*" || text == "&") return "u" + text;
      return text;
    case NodeKind::Postfix:
      return "post" + text;
    case NodeKind::Goto:
    case NodeKind::Label:
      return std::string(kind_name(kind)) + ":" + text;
    case NodeKind::Unknown:
      return text.empty() ? "unknown" : text;
    default:
      return std::string(kind_name(kind));
  }
}

bool Node::operator==(const Node& other) const {
  return kind == other.kind && text == other.text && children == other.children;
}

std::size_t node_count(const Node& node) {
  std::size_t n = 1;
  for (const auto& c : node.children) n += node_count(c);
  return n;
}

std::size_t node_count(const SyntaxTree& tree) { return tree.root ? node_count(*tree.root) : 0; }

std::string structural_key(const Node& node) {
  if (node.children.empty()) return node.label();
  std::string key = "(" + node.label();
  for (const auto& c : node.children) {
    key += ' ';
    key += structural_key(c);
  }
  key += ')';
  return key;
}

namespace {

std::string join_children(const Node& n, std::size_t from, std::string_view sep) {
  std::string out;
  for (std::size_t i = from; i < n.children.size(); ++i) {
    if (i > from) out += sep;
    out += to_source(n.children[i]);
  }
  return out;
}

}  // namespace

std::string to_source(const Node& n) {
  auto child = [&](std::size_t i) { return i < n.children.size() ? to_source(n.children[i]) : std::string(); };
  switch (n.kind) {
    case NodeKind::Identifier:
    case NodeKind::Number:
    case NodeKind::String:
    case NodeKind::Char:
    case NodeKind::TypeName:
      return n.text;
    case NodeKind::Binary:
      return "(" + child(0) + " " + n.text + " " + child(1) + ")";
    case NodeKind::Assign:
      return child(0) + " " + n.text + " " + child(1);
    case NodeKind::Unary:
      return n.text + child(0);
    case NodeKind::Postfix:
      return child(0) + n.text;
    case NodeKind::Conditional:
      return "(" + child(0) + " ? " + child(1) + " : " + child(2) + ")";
    case NodeKind::Call:
      return child(0) + "(" + join_children(n, 1, ", ") + ")";
    case NodeKind::Index:
      return child(0) + "[" + child(1) + "]";
    case NodeKind::Member:
      return child(0) + n.text + child(1);
    case NodeKind::Cast:
      return "(" + child(0) + ")" + child(1);
    case NodeKind::Sizeof:
      return "sizeof(" + child(0) + ")";
    case NodeKind::Comma:
      return child(0) + ", " + child(1);
    case NodeKind::InitList:
      return "{" + join_children(n, 0, ", ") + "}";
    case NodeKind::ExprStmt:
      return child(0) + ";";
    case NodeKind::Decl: {
      std::string out = child(0);
      for (std::size_t i = 1; i < n.children.size(); ++i) out += (i > 1 ? ", " : " ") + to_source(n.children[i]);
      return out + ";";
    }
    case NodeKind::Declarator:
      return n.children.size() > 1 ? child(0) + " = " + child(1) : child(0);
    case NodeKind::Compound:
      return "{ " + join_children(n, 0, " ") + (n.children.empty() ? "}" : " }");
    case NodeKind::If:
      return "if (" + child(0) + ") " + child(1) + (n.children.size() > 2 ? " else " + child(2) : "");
    case NodeKind::While:
      return "while (" + child(0) + ") " + child(1);
    case NodeKind::DoWhile:
      return "do " + child(0) + " while (" + child(1) + ");";
    case NodeKind::For:
      return "for (" + child(0) + " " + child(1) + "; " + child(2) + ") " + child(3);
    case NodeKind::Switch:
      return "switch (" + child(0) + ") " + child(1);
    case NodeKind::Case:
      return "case " + child(0) + ":";
    case NodeKind::Default:
      return "default:";
    case NodeKind::Break:
      return "break;";
    case NodeKind::Continue:
      return "continue;";
    case NodeKind::Return:
      return n.children.empty() ? "return;" : "return " + child(0) + ";";
    case NodeKind::Goto:
      return "goto " + n.text + ";";
    case NodeKind::Label:
      return n.text + ":";
    case NodeKind::Empty:
      return ";";
    case NodeKind::Unknown:
      return n.text;
    case NodeKind::Inlined:
      return "/*inline*/ " + join_children(n, 0, " ");
    case NodeKind::FunctionDef:
      return child(0) + "(" + child(1) + ") " + child(2);
    case NodeKind::ParamList:
      return join_children(n, 0, ", ");
    case NodeKind::Param:
      return n.text;
  }
  return n.text;
}

void visit_preorder(const Node& node, const std::function<void(const Node&)>& fn) {
  fn(node);
  for (const auto& c : node.children) visit_preorder(c, fn);
}

bool contains_kind(const Node& node, NodeKind kind) {
  if (node.kind == kind) return true;
  for (const auto& c : node.children)
    if (contains_kind(c, kind)) return true;
  return false;
}

bool has_side_effects(const Node& node) {
  switch (node.kind) {
    case NodeKind::Call:
    case NodeKind::Assign:
    case NodeKind::Postfix:
    case NodeKind::Inlined:
      return true;
    case NodeKind::Unary:
      if (node.text == "++" || node.text == "--") return true;
      break;
    default:
      break;
  }
  for (const auto& c : node.children)
    if (has_side_effects(c)) return true;
  return false;
}

namespace {

void collect(const Node& n, std::vector<const Node*>& out) {
  if (is_statement_kind(n.kind)) out.push_back(&n);
  for (const auto& c : n.children) collect(c, out);
}

}  // namespace

std::vector<const Node*> collect_statements(const Node& root) {
  std::vector<const Node*> out;
  collect(root, out);
  return out;
}

Node statement_header(const Node& stmt) {
  Node copy = stmt;
  auto empty_body = [&](Node& body) { body = Node(NodeKind::Compound, "", body.span); };
  switch (stmt.kind) {
    case NodeKind::If:
      copy.children.resize(2);
      empty_body(copy.children[1]);
      break;
    case NodeKind::While:
    case NodeKind::Switch:
      if (copy.children.size() > 1) empty_body(copy.children[1]);
      break;
    case NodeKind::DoWhile:
      if (!copy.children.empty()) empty_body(copy.children[0]);
      break;
    case NodeKind::For:
      if (copy.children.size() > 3) empty_body(copy.children[3]);
      break;
    case NodeKind::Compound:
      copy.children.clear();
      break;
    default:
      break;
  }
  return copy;
}

}  // namespace vtrace::cfront
