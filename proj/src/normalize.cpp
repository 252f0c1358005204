#include <algorithm>

#include "vtrace/cfront.hpp"

namespace vtrace::cfront {

namespace {

constexpr int kMaxPasses = 16;

bool is_number(const Node& n, std::string_view text) { return n.kind == NodeKind::Number && n.text == text; }

bool is_binary(const Node& n, std::string_view op) {
  return n.kind == NodeKind::Binary && n.text == op && n.children.size() == 2;
}

bool is_additive(const Node& n) {
  return is_binary(n, "+") || is_binary(n, "-") || (n.kind == NodeKind::Unary && n.text == "-");
}

Node binary(std::string op, Node lhs, Node rhs, const SourceSpan& span) {
  return Node(NodeKind::Binary, std::move(op), span, {std::move(lhs), std::move(rhs)});
}

Node unwrap_single(Node n) {
  if (n.kind == NodeKind::Compound && n.children.size() == 1 && n.children[0].kind != NodeKind::Decl) {
    Node inner = std::move(n.children[0]);
    return inner;
  }
  return n;
}

// ---- expressions ------------------------------------------------------

struct Term {
  bool negative = false;
  Node node;
};

void collect_terms(const Node& n, bool negative, std::vector<Term>& out) {
  if (is_binary(n, "+")) {
    collect_terms(n.children[0], negative, out);
    collect_terms(n.children[1], negative, out);
  } else if (is_binary(n, "-")) {
    collect_terms(n.children[0], negative, out);
    collect_terms(n.children[1], !negative, out);
  } else if (n.kind == NodeKind::Unary && n.text == "-" && n.children.size() == 1) {
    collect_terms(n.children[0], !negative, out);
  } else if (n.kind == NodeKind::Unary && n.text == "+" && n.children.size() == 1) {
    collect_terms(n.children[0], negative, out);
  } else if (!is_number(n, "0")) {
    out.push_back({negative, n});
  }
}

// Pure positive terms sorted, then pure negative terms sorted, then terms
// with side effects in source order.
Node build_sum(std::vector<Term> terms, const SourceSpan& span) {
  std::vector<Term> pos, neg, effect;
  for (auto& t : terms) {
    if (has_side_effects(t.node)) effect.push_back(std::move(t));
    else (t.negative ? neg : pos).push_back(std::move(t));
  }
  auto by_key = [](const Term& a, const Term& b) { return structural_key(a.node) < structural_key(b.node); };
  std::stable_sort(pos.begin(), pos.end(), by_key);
  std::stable_sort(neg.begin(), neg.end(), by_key);
  std::vector<Term> ordered;
  for (auto* group : {&pos, &neg, &effect})
    for (auto& t : *group) ordered.push_back(std::move(t));
  if (ordered.empty()) return Node(NodeKind::Number, "0", span);
  Node acc = ordered[0].negative ? Node(NodeKind::Unary, "-", span, {ordered[0].node}) : ordered[0].node;
  for (std::size_t i = 1; i < ordered.size(); ++i)
    acc = binary(ordered[i].negative ? "-" : "+", std::move(acc), std::move(ordered[i].node), span);
  return acc;
}

void flatten_chain(const Node& n, const std::string& op, std::vector<Node>& out) {
  if (is_binary(n, op)) {
    flatten_chain(n.children[0], op, out);
    flatten_chain(n.children[1], op, out);
  } else {
    out.push_back(n);
  }
}

bool is_chain_op(std::string_view op) {
  return op == "*" || op == "&" || op == "|" || op == "^" || op == "&&" || op == "||";
}

Node normalize_expression(Node n) {
  if (n.kind == NodeKind::Binary && n.children.size() == 2) {
    const std::string op = n.text;
    if (op == "<" || op == "<=") {
      std::swap(n.children[0], n.children[1]);
      n.text = op == "<" ? ">" : ">=";
      return n;
    }
    if ((op == ">" || op == ">=") && (is_additive(n.children[0]) || is_additive(n.children[1])) &&
        !is_number(n.children[1], "0")) {
      std::vector<Term> terms;
      collect_terms(n.children[0], false, terms);
      collect_terms(n.children[1], true, terms);
      return binary(op, build_sum(std::move(terms), n.span), Node(NodeKind::Number, "0", n.span), n.span);
    }
    if (op == "+" || op == "-") {
      std::vector<Term> terms;
      collect_terms(n, false, terms);
      return build_sum(std::move(terms), n.span);
    }
    if (op == "==" || op == "!=") {
      auto& a = n.children[0];
      auto& b = n.children[1];
      if (!has_side_effects(a) && !has_side_effects(b) && structural_key(b) < structural_key(a)) std::swap(a, b);
      return n;
    }
    if (is_chain_op(op)) {
      std::vector<Node> operands;
      flatten_chain(n, op, operands);
      std::vector<Node> pure, effect;
      for (auto& o : operands) (has_side_effects(o) ? effect : pure).push_back(std::move(o));
      std::stable_sort(pure.begin(), pure.end(),
                       [](const Node& a, const Node& b) { return structural_key(a) < structural_key(b); });
      for (auto& e : effect) pure.push_back(std::move(e));
      Node acc = std::move(pure[0]);
      for (std::size_t i = 1; i < pure.size(); ++i) acc = binary(op, std::move(acc), std::move(pure[i]), n.span);
      return acc;
    }
    return n;
  }
  if (n.kind == NodeKind::Unary && n.children.size() == 1) {
    if (n.text == "-" && is_additive(n.children[0])) {
      std::vector<Term> terms;
      collect_terms(n, false, terms);
      return build_sum(std::move(terms), n.span);
    }
    if (n.text == "!" && n.children[0].kind == NodeKind::Binary && n.children[0].children.size() == 2) {
      static const std::pair<std::string_view, std::string_view> kNegations[] = {
          {">", "<="}, {">=", "<"}, {"<", ">="}, {"<=", ">"}, {"==", "!="}, {"!=", "=="}};
      Node inner = n.children[0];
      for (const auto& [from, to] : kNegations) {
        if (inner.text == from) {
          inner.text = std::string(to);
          inner.span = n.span;
          return inner;
        }
      }
    }
    return n;
  }
  if (n.kind == NodeKind::Assign && n.text != "=" && n.children.size() == 2 && !has_side_effects(n.children[0])) {
    std::string op = n.text.substr(0, n.text.size() - 1);
    Node lhs = n.children[0];
    Node rhs = binary(op, n.children[0], n.children[1], n.span);
    return Node(NodeKind::Assign, "=", n.span, {std::move(lhs), std::move(rhs)});
  }
  return n;
}

// ---- statements -------------------------------------------------------

Node make_expr_stmt(Node e, const SourceSpan& span) {
  if (is_statement_kind(e.kind)) return e;
  return Node(NodeKind::ExprStmt, "", span, {std::move(e)});
}

Node block_of(std::vector<Node> stmts, const SourceSpan& span) {
  if (stmts.size() == 1) return unwrap_single(Node(NodeKind::Compound, "", span, std::move(stmts)));
  return Node(NodeKind::Compound, "", span, std::move(stmts));
}

// switch (e) { case v1: case v2: s; break; ... default: d; }
//   => if (e == v1 || e == v2) s; else if ... else d;
Node rewrite_switch(const Node& sw) {
  const Node& cond = sw.children[0];
  std::vector<Node> body_items;
  if (sw.children.size() > 1) {
    if (sw.children[1].kind == NodeKind::Compound) body_items = sw.children[1].children;
    else body_items.push_back(sw.children[1]);
  }
  struct Group {
    std::vector<Node> values;
    bool is_default = false;
    std::vector<Node> stmts;
    SourceSpan span;
  };
  std::vector<Group> groups;
  bool in_labels = false;
  for (auto& item : body_items) {
    if (item.kind == NodeKind::Case || item.kind == NodeKind::Default) {
      if (!in_labels) {
        groups.emplace_back();
        groups.back().span = item.span;
      }
      in_labels = true;
      if (item.kind == NodeKind::Default) groups.back().is_default = true;
      else if (!item.children.empty()) groups.back().values.push_back(item.children[0]);
      continue;
    }
    in_labels = false;
    if (groups.empty()) continue;  // unreachable code before the first label
    groups.back().stmts.push_back(item);
  }
  for (auto& g : groups)
    if (!g.stmts.empty() && g.stmts.back().kind == NodeKind::Break) g.stmts.pop_back();

  std::optional<Node> else_branch;
  for (auto& g : groups)
    if (g.is_default) else_branch = block_of(g.stmts, g.span);
  std::optional<Node> chain = else_branch;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    if (it->is_default) continue;
    std::optional<Node> test;
    for (auto& v : it->values) {
      Node eq = binary("==", cond, v, v.span);
      test = test ? binary("||", std::move(*test), std::move(eq), it->span) : std::move(eq);
    }
    if (!test) continue;
    Node node(NodeKind::If, "", sw.span, {std::move(*test), block_of(it->stmts, it->span)});
    if (chain) node.children.push_back(std::move(*chain));
    chain = std::move(node);
  }
  if (!chain) return Node(NodeKind::Empty, "", sw.span);
  return std::move(*chain);
}

// for (init; cond; step) body  =>  init; while (cond) { body; step; }
Node rewrite_for(const Node& f) {
  Node init = f.children[0];
  Node cond = f.children[1].kind == NodeKind::Empty ? Node(NodeKind::Number, "1", f.span) : f.children[1];
  const Node& step = f.children[2];
  const Node& body = f.children[3];
  std::vector<Node> loop_body;
  if (body.kind == NodeKind::Compound) loop_body = body.children;
  else loop_body.push_back(body);
  if (step.kind != NodeKind::Empty) loop_body.push_back(make_expr_stmt(step, step.span));
  Node loop(NodeKind::While, "", f.span, {std::move(cond), block_of(std::move(loop_body), body.span)});
  std::vector<Node> out;
  if (init.kind != NodeKind::Empty) out.push_back(make_expr_stmt(std::move(init), f.span));
  out.push_back(std::move(loop));
  return block_of(std::move(out), f.span);
}

// x = c ? x : e  =>  if (!c) x = e;     x = c ? e : x  =>  if (c) x = e;
std::optional<Node> rewrite_conditional_assignment(const Node& stmt) {
  if (stmt.children.size() != 1) return std::nullopt;
  const Node& a = stmt.children[0];
  if (a.kind != NodeKind::Assign || a.text != "=" || a.children.size() != 2) return std::nullopt;
  const Node& target = a.children[0];
  const Node& value = a.children[1];
  if (value.kind != NodeKind::Conditional || value.children.size() != 3 || has_side_effects(target)) return std::nullopt;
  const Node& c = value.children[0];
  Node test;
  const Node* assigned;
  if (value.children[1] == target) {
    test = Node(NodeKind::Unary, "!", c.span, {c});
    assigned = &value.children[2];
  } else if (value.children[2] == target) {
    test = c;
    assigned = &value.children[1];
  } else {
    return std::nullopt;
  }
  Node assign(NodeKind::Assign, "=", a.span, {target, *assigned});
  Node body(NodeKind::ExprStmt, "", stmt.span, {std::move(assign)});
  return Node(NodeKind::If, "", stmt.span, {std::move(test), std::move(body)});
}

Node normalize_statement(Node n) {
  switch (n.kind) {
    case NodeKind::Switch:
      return rewrite_switch(n);
    case NodeKind::For:
      if (n.children.size() == 4) return rewrite_for(n);
      return n;
    case NodeKind::DoWhile:
      if (n.children.size() == 2) return Node(NodeKind::While, "", n.span, {n.children[1], n.children[0]});
      return n;
    case NodeKind::If:
      for (std::size_t i = 1; i < n.children.size(); ++i) n.children[i] = unwrap_single(std::move(n.children[i]));
      return n;
    case NodeKind::While:
      if (n.children.size() == 2) n.children[1] = unwrap_single(std::move(n.children[1]));
      return n;
    case NodeKind::ExprStmt:
      if (auto r = rewrite_conditional_assignment(n)) return std::move(*r);
      return n;
    case NodeKind::Compound: {
      std::vector<Node> out;
      for (auto& c : n.children) {
        if (c.kind == NodeKind::Empty) continue;
        if (c.kind == NodeKind::Compound) {
          for (auto& g : c.children)
            if (g.kind != NodeKind::Empty) out.push_back(std::move(g));
          continue;
        }
        out.push_back(std::move(c));
      }
      n.children = std::move(out);
      return n;
    }
    default:
      return n;
  }
}

Node pass(const Node& n) {
  Node out = n;
  for (auto& c : out.children) c = pass(c);
  if (is_statement_kind(out.kind)) return normalize_statement(std::move(out));
  return normalize_expression(std::move(out));
}

}  // namespace

Node normalize_node(const Node& node) {
  Node current = node;
  for (int i = 0; i < kMaxPasses; ++i) {
    Node next = pass(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

NormalizedAst normalize_ast(const SyntaxTree& tree) {
  NormalizedAst out;
  if (tree.root) out.tree.root = normalize_node(*tree.root);
  return out;
}

}  // namespace vtrace::cfront
