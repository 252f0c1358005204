#include "vtrace/slicer.hpp"

#include <algorithm>
#include <deque>

#include "vtrace/cfront.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/lexer.hpp"

namespace vtrace {

using cfront::Node;
using cfront::NodeKind;

std::string_view to_string(StatementKind kind) {
  switch (kind) {
    case StatementKind::Assignment: return "assignment";
    case StatementKind::Conditional: return "conditional";
    case StatementKind::Call: return "call";
    case StatementKind::Return: return "return";
    case StatementKind::LoopHeader: return "loop_header";
    case StatementKind::Other: return "other";
  }
  return "other";
}

std::string_view to_string(RowKind kind) {
  switch (kind) {
    case RowKind::Context: return "context";
    case RowKind::Deleted: return "deleted";
    case RowKind::Added: return "added";
  }
  return "context";
}

std::string_view to_string(FlowOrigin origin) {
  switch (origin) {
    case FlowOrigin::Seed: return "seed";
    case FlowOrigin::Backward: return "backward";
    case FlowOrigin::ForwardData: return "forward-data";
    case FlowOrigin::ForwardControl: return "forward-control";
  }
  return "seed";
}

namespace {

// ---- def/use extraction ----------------------------------------------

struct Access {
  std::set<std::string> defs, weak_defs, uses;
};

void uses_of_text(const std::string& text, Access& a) {
  for (const auto& t : cfront::tokenize(text))
    if (t.kind == cfront::TokenKind::Identifier) a.uses.insert(t.text);
}

void collect_uses(const Node& n, Access& a);

// Writes through an lvalue. Plain identifiers are strong definitions;
// member, index and dereference paths weakly define their base identifier.
void collect_write(const Node& target, Access& a, bool strong_allowed) {
  const Node* n = &target;
  bool strong = strong_allowed;
  while (true) {
    if (n->kind == NodeKind::Identifier) {
      (strong ? a.defs : a.weak_defs).insert(n->text);
      return;
    }
    if (n->kind == NodeKind::Member && n->children.size() == 2) {
      strong = false;
      n = &n->children[0];
    } else if (n->kind == NodeKind::Index && n->children.size() == 2) {
      collect_uses(n->children[1], a);
      strong = false;
      n = &n->children[0];
    } else if (n->kind == NodeKind::Unary && n->text == "*" && n->children.size() == 1) {
      strong = false;
      if (n->children[0].kind != NodeKind::Identifier) {
        // *(p + i): the address arithmetic is read.
        collect_uses(n->children[0], a);
      }
      n = &n->children[0];
      if (n->kind == NodeKind::Binary && !n->children.empty()) n = &n->children[0];
    } else if (n->kind == NodeKind::Cast && n->children.size() == 2) {
      n = &n->children[1];
    } else {
      collect_uses(*n, a);
      return;
    }
  }
}

void collect_uses(const Node& n, Access& a) {
  switch (n.kind) {
    case NodeKind::Identifier:
      a.uses.insert(n.text);
      return;
    case NodeKind::Number:
    case NodeKind::String:
    case NodeKind::Char:
    case NodeKind::TypeName:
      return;
    case NodeKind::Unknown:
      uses_of_text(n.text, a);
      return;
    case NodeKind::Member:
      if (!n.children.empty()) collect_uses(n.children[0], a);
      return;
    case NodeKind::Assign:
      if (n.children.size() == 2) {
        collect_write(n.children[0], a, true);
        if (n.text != "=") {
          // x += e reads x as well.
          Access read;
          collect_uses(n.children[0], read);
          a.uses.insert(read.uses.begin(), read.uses.end());
        }
        collect_uses(n.children[1], a);
      }
      return;
    case NodeKind::Postfix:
    case NodeKind::Unary:
      if ((n.text == "++" || n.text == "--") && n.children.size() == 1) {
        collect_write(n.children[0], a, true);
        collect_uses(n.children[0], a);
        return;
      }
      break;
    case NodeKind::Call:
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        const Node& c = n.children[i];
        if (i == 0 && c.kind == NodeKind::Identifier) continue;  // callee name
        if (i > 0 && c.kind == NodeKind::Unary && c.text == "&" && c.children.size() == 1) {
          collect_write(c.children[0], a, false);
          collect_uses(c.children[0], a);
          continue;
        }
        collect_uses(c, a);
      }
      return;
    case NodeKind::Cast:
      if (n.children.size() == 2) collect_uses(n.children[1], a);
      return;
    default:
      break;
  }
  for (const auto& c : n.children) collect_uses(c, a);
}

void collect_decl(const Node& decl, Access& a) {
  for (std::size_t i = 1; i < decl.children.size(); ++i) {
    const Node& d = decl.children[i];
    if (d.kind != NodeKind::Declarator || d.children.empty()) continue;
    // Only declarations with an initializer define the variable.
    if (d.children.size() > 1) {
      a.defs.insert(d.children[0].text);
      collect_uses(d.children[1], a);
    }
  }
}

bool jumps_away(const Node& s) {
  switch (s.kind) {
    case NodeKind::Return:
    case NodeKind::Break:
    case NodeKind::Continue:
    case NodeKind::Goto:
      return true;
    case NodeKind::Compound:
      return !s.children.empty() && jumps_away(s.children.back());
    default:
      return false;
  }
}


class PdgBuilder {
 public:
  DependenceGraph g;

  void block(const Node& compound, int container, const std::vector<std::pair<int, int>>& path) {
    int last_guard = 0;
    for (const auto& s : compound.children) statement(s, container, path, last_guard);
  }

 private:
  void add(const Node& s, StatementKind kind, Access access, int container, const std::vector<std::pair<int, int>>& path,
           int& last_guard) {
    const int line = s.span.begin_line;
    auto [it, inserted] = g.statements.try_emplace(line);
    PdgStatement& st = it->second;
    if (inserted) {
      st.line = line;
      st.kind = kind;
      st.structural_parent = container;
      st.guard_parent = last_guard;
      st.block = path;
    } else if (st.kind == StatementKind::Other || st.kind == StatementKind::Call) {
      if (kind != StatementKind::Other) st.kind = kind;
    }
    st.end_line = std::max(st.end_line, s.span.end_line);
    st.defs.insert(access.defs.begin(), access.defs.end());
    st.weak_defs.insert(access.weak_defs.begin(), access.weak_defs.end());
    st.uses.insert(access.uses.begin(), access.uses.end());
  }

  void statement(const Node& s, int container, const std::vector<std::pair<int, int>>& path, int& last_guard) {
    const int line = s.span.begin_line;
    Access a;
    switch (s.kind) {
      case NodeKind::Compound:
        // A nested block keeps the enclosing container; guards inside it
        // only cover the rest of that block.
        {
          auto inner = path;
          inner.emplace_back(line, 0);
          int guard = last_guard;
          for (const auto& c : s.children) statement(c, container, inner, guard);
        }
        return;
      case NodeKind::If: {
        if (!s.children.empty()) collect_uses(s.children[0], a);
        add(s, StatementKind::Conditional, a, container, path, last_guard);
        for (std::size_t i = 1; i < s.children.size(); ++i) body(s.children[i], line, path, static_cast<int>(i));
        if (s.children.size() == 2 && jumps_away(s.children[1])) {
          g.statements[line].is_guard = true;
          last_guard = line;
        }
        return;
      }
      case NodeKind::While:
      case NodeKind::Switch:
        if (!s.children.empty()) collect_uses(s.children[0], a);
        add(s, s.kind == NodeKind::Switch ? StatementKind::Conditional : StatementKind::LoopHeader, a, container, path,
            last_guard);
        if (s.children.size() > 1) body(s.children[1], line, path, 1);
        return;
      case NodeKind::DoWhile:
        if (s.children.size() > 1) collect_uses(s.children[1], a);
        add(s, StatementKind::LoopHeader, a, container, path, last_guard);
        if (!s.children.empty()) body(s.children[0], line, path, 1);
        return;
      case NodeKind::For:
        for (std::size_t i = 0; i < 3 && i < s.children.size(); ++i) {
          const Node& part = s.children[i];
          if (part.kind == NodeKind::Decl) collect_decl(part, a);
          else if (part.kind == NodeKind::ExprStmt && !part.children.empty()) collect_uses(part.children[0], a);
          else if (part.kind != NodeKind::Empty) collect_uses(part, a);
        }
        add(s, StatementKind::LoopHeader, a, container, path, last_guard);
        if (s.children.size() > 3) body(s.children[3], line, path, 1);
        return;
      case NodeKind::Decl:
        collect_decl(s, a);
        add(s, a.defs.empty() ? StatementKind::Other : StatementKind::Assignment, a, container, path, last_guard);
        return;
      case NodeKind::ExprStmt: {
        if (s.children.empty()) return;
        const Node& e = s.children[0];
        collect_uses(e, a);
        StatementKind kind = StatementKind::Other;
        if (e.kind == NodeKind::Assign || ((e.kind == NodeKind::Postfix || e.kind == NodeKind::Unary) &&
                                           (e.text == "++" || e.text == "--")))
          kind = StatementKind::Assignment;
        else if (e.kind == NodeKind::Call)
          kind = StatementKind::Call;
        else if (!a.defs.empty() || !a.weak_defs.empty())
          kind = StatementKind::Assignment;
        add(s, kind, a, container, path, last_guard);
        return;
      }
      case NodeKind::Return:
        if (!s.children.empty()) collect_uses(s.children[0], a);
        add(s, StatementKind::Return, a, container, path, last_guard);
        return;
      case NodeKind::Unknown:
        uses_of_text(s.text, a);
        add(s, StatementKind::Other, a, container, path, last_guard);
        return;
      case NodeKind::Empty:
        return;
      default:
        add(s, StatementKind::Other, a, container, path, last_guard);
        return;
    }
  }

  void body(const Node& b, int owner, std::vector<std::pair<int, int>> path, int branch) {
    path.emplace_back(owner, branch);
    int guard = 0;
    if (b.kind == NodeKind::Compound) {
      for (const auto& c : b.children) statement(c, owner, path, guard);
    } else {
      statement(b, owner, path, guard);
    }
  }
};

bool is_prefix(const std::vector<std::pair<int, int>>& prefix, const std::vector<std::pair<int, int>>& path) {
  return prefix.size() <= path.size() && std::equal(prefix.begin(), prefix.end(), path.begin());
}

}  // namespace

std::set<int> DependenceGraph::reaching_defs(const std::string& var, int line) const {
  std::set<int> out;
  auto use_it = statements.find(line);
  if (use_it == statements.end()) return out;
  const auto& use_block = use_it->second.block;
  for (auto it = statements.lower_bound(line); it != statements.begin();) {
    --it;
    const auto& st = it->second;
    if (!st.defines(var)) continue;
    out.insert(st.line);
    // A strong definition that dominates the use hides everything before it.
    if (st.defs.count(var) && is_prefix(st.block, use_block)) break;
  }
  return out;
}

int DependenceGraph::statement_at(int source_line) const {
  int best = 0;
  for (const auto& [line, st] : statements) {
    if (line > source_line) break;
    if (st.end_line >= source_line) best = line;  // later starts are more deeply nested
  }
  return best;
}

std::set<int> DependenceGraph::structural_descendants(int line) const {
  std::set<int> out;
  for (const auto& [l, st] : statements) {
    if (l <= line) continue;
    int p = st.structural_parent;
    while (p && p != line) {
      auto it = statements.find(p);
      p = it == statements.end() ? 0 : it->second.structural_parent;
    }
    if (p == line) out.insert(l);
  }
  return out;
}

std::vector<int> DependenceGraph::control_ancestors(int line) const {
  std::vector<int> out;
  auto it = statements.find(line);
  while (it != statements.end()) {
    int p = it->second.control_parent();
    if (!p || p == it->first) break;
    out.push_back(p);
    it = statements.find(p);
  }
  return out;
}

DependenceGraph build_pdg(const cfront::SyntaxTree& tree) {
  PdgBuilder b;
  if (!tree.root) return b.g;
  const Node& root = *tree.root;
  const Node* body = &root;
  if (root.kind == NodeKind::FunctionDef && root.children.size() > 2) body = &root.children[2];
  b.block(*body, 0, {});
  auto& g = b.g;

  std::set<DataEdge> edges;
  for (const auto& [line, st] : g.statements)
    for (const auto& v : st.uses)
      for (int d : g.reaching_defs(v, line))
        if (d != line) edges.insert({d, line, v});
  g.data_edges.assign(edges.begin(), edges.end());

  for (const auto& [line, st] : g.statements) {
    if (st.guard_parent && st.guard_parent != line)
      g.control_edges.push_back({st.guard_parent, line, ControlKind::Guard});
    else if (st.structural_parent && st.structural_parent != line)
      g.control_edges.push_back({st.structural_parent, line, ControlKind::Structural});
  }
  return g;
}

namespace {

std::set<int> seed_statements(const DependenceGraph& g, const std::set<int>& seed_lines) {
  std::set<int> out;
  for (int l : seed_lines)
    if (int s = g.statement_at(l)) out.insert(s);
  return out;
}

}  // namespace

std::set<int> backward_slice(const DependenceGraph& g, const SliceCriterion& c) {
  std::set<int> result;
  auto seeds = seed_statements(g, c.seed_lines);
  std::deque<std::pair<int, std::string>> work;
  std::set<std::pair<int, std::string>> seen;
  for (int s : seeds) {
    const auto& st = g.statements.at(s);
    for (const auto& v : c.seed_variables)
      if (st.uses.count(v)) work.emplace_back(s, v);
    for (int p : g.control_ancestors(s)) result.insert(p);
  }
  while (!work.empty()) {
    auto item = work.front();
    work.pop_front();
    if (!seen.insert(item).second) continue;
    for (int d : g.reaching_defs(item.second, item.first)) {
      if (d == item.first) continue;
      result.insert(d);
      // The definition's own inputs are traced further back.
      for (const auto& w : g.statements.at(d).uses) work.emplace_back(d, w);
    }
  }
  for (int s : seeds) result.erase(s);
  return result;
}

std::set<int> ForwardSlice::all() const {
  std::set<int> out = data;
  out.insert(control.begin(), control.end());
  return out;
}

ForwardSlice forward_slice_detail(const DependenceGraph& g, const SliceCriterion& c) {
  ForwardSlice result;
  auto seeds = seed_statements(g, c.seed_lines);
  std::set<int> visited;
  std::deque<int> work;

  auto reach = [&](int line, bool by_control) {
    if (seeds.count(line)) return;
    if (by_control) {
      result.control.insert(line);
      result.data.erase(line);
    } else if (!result.control.count(line)) {
      result.data.insert(line);
    }
    work.push_back(line);
  };
  auto data_successors = [&](int from, const std::string& v) {
    for (const auto& e : g.data_edges)
      if (e.from == from && e.variable == v && e.to > from) reach(e.to, false);
  };
  auto expand = [&](int line) {
    if (!visited.insert(line).second) return;
    const auto& st = g.statements.at(line);
    if (st.kind == StatementKind::Return) return;
    if (st.kind == StatementKind::Conditional || st.kind == StatementKind::LoopHeader)
      for (int d : g.structural_descendants(line)) reach(d, true);
    // Assigned variables join the criterion from this point on.
    for (const auto& v : st.defs) data_successors(line, v);
    for (const auto& v : st.weak_defs) data_successors(line, v);
  };

  for (int s : seeds) {
    const auto& st = g.statements.at(s);
    for (const auto& v : c.seed_variables) {
      std::set<int> defs;
      if (st.uses.count(v)) defs = g.reaching_defs(v, s);
      defs.erase(s);
      if (st.uses.count(v) && defs.empty()) {
        // Parameter or global: later reads of the same incoming value follow.
        for (const auto& [line, other] : g.statements)
          if (line > s && other.uses.count(v) && g.reaching_defs(v, line).empty()) reach(line, false);
      }
      if (st.defines(v)) defs.insert(s);
      for (int d : defs)
        for (const auto& e : g.data_edges)
          if (e.from == d && e.variable == v && e.to > s) reach(e.to, false);
    }
    expand(s);
  }
  while (!work.empty()) {
    int line = work.front();
    work.pop_front();
    expand(line);
  }
  return result;
}

std::set<int> forward_slice(const DependenceGraph& g, const SliceCriterion& c) { return forward_slice_detail(g, c).all(); }

// ---- dangerous flow -----------------------------------------------------

std::vector<FlowRow> merge_rows(const PatchedFunction& fn) {
  std::vector<FlowRow> rows;
  const auto& pre = fn.pre_body;
  const auto& post = fn.post_body;
  int row = pre.lines.empty() ? post.first_line : pre.first_line;
  std::size_t i = 0, j = 0;
  auto pre_no = [&](std::size_t k) { return pre.first_line + static_cast<int>(k); };
  auto post_no = [&](std::size_t k) { return post.first_line + static_cast<int>(k); };
  while (i < pre.lines.size() || j < post.lines.size()) {
    FlowRow r;
    r.row = row++;
    if (i < pre.lines.size() && fn.deleted.count(pre_no(i))) {
      r.kind = RowKind::Deleted;
      r.old_line = pre_no(i);
      r.text = pre.lines[i++];
    } else if (j < post.lines.size() && (fn.added.count(post_no(j)) || i >= pre.lines.size())) {
      r.kind = fn.added.count(post_no(j)) ? RowKind::Added : RowKind::Context;
      r.new_line = post_no(j);
      r.text = post.lines[j++];
    } else {
      r.kind = RowKind::Context;
      r.old_line = pre_no(i);
      r.text = pre.lines[i++];
      if (j < post.lines.size()) r.new_line = post_no(j++);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::set<int> DangerousFlow::row_numbers() const {
  std::set<int> out;
  for (const auto& s : statements) out.insert(s.row);
  return out;
}

std::set<int> DangerousFlow::rows_with(FlowOrigin origin) const {
  std::set<int> out;
  for (const auto& s : statements)
    if (s.origin == origin) out.insert(s.row);
  return out;
}

const FlowRow* DangerousFlow::row(int number) const {
  for (const auto& r : rows)
    if (r.row == number) return &r;
  return nullptr;
}

DangerousFlow extract_dangerous_flow(const PatchedFunction& fn, bool direction_both) {
  return extract_dangerous_flow(fn, direction_both ? SliceDirection::Both : SliceDirection::BackwardOnly);
}

DangerousFlow extract_dangerous_flow(const PatchedFunction& fn, SliceDirection direction) {
  DangerousFlow flow;
  flow.function_name = fn.function_name;
  flow.file_path = fn.file_path;
  flow.commit = fn.post_body.commit;
  flow.rows = merge_rows(fn);

  // Functions that only gain lines are sliced on the post-image.
  const bool use_post = fn.deleted.empty();
  flow.sliced_post_image = use_post;
  const FunctionSnapshot& body = use_post ? fn.post_body : fn.pre_body;

  std::map<int, int> row_of_line;
  for (const auto& r : flow.rows) {
    auto n = use_post ? r.new_line : r.old_line;
    if (n && r.kind != (use_post ? RowKind::Deleted : RowKind::Added)) row_of_line[*n] = r.row;
  }

  std::map<int, FlowOrigin> origin;
  for (const auto& r : flow.rows)
    if (r.kind != RowKind::Context) origin[r.row] = FlowOrigin::Seed;

  if (!body.lines.empty()) {
    cfront::SyntaxTree tree;
    try {
      tree = cfront::parse_function(body);
    } catch (const Unparseable&) {
      tree = {};
    }
    if (tree.root) {
      auto g = build_pdg(tree);
      SliceCriterion crit;
      crit.seed_lines = use_post ? fn.added : fn.deleted;
      crit.seed_variables = fn.patch_variables;
      auto mark = [&](int line, FlowOrigin o) {
        // A line is reported under the first origin that reached it.
        auto it = row_of_line.find(line);
        if (it != row_of_line.end()) origin.try_emplace(it->second, o);
      };
      if (direction != SliceDirection::ForwardOnly)
        for (int l : backward_slice(g, crit)) mark(l, FlowOrigin::Backward);
      if (direction != SliceDirection::BackwardOnly) {
        auto fwd = forward_slice_detail(g, crit);
        for (int l : fwd.control) mark(l, FlowOrigin::ForwardControl);
        for (int l : fwd.data) mark(l, FlowOrigin::ForwardData);
      }
    }
  }

  for (const auto& [row, o] : origin) {
    const FlowRow* r = flow.row(row);
    flow.statements.push_back({row, r->kind, r->text, o});
  }
  bool any_pre = std::any_of(flow.statements.begin(), flow.statements.end(),
                             [](const FlowStatement& s) { return s.kind != RowKind::Added; });
  if (!any_pre)
    throw EmptyFlow("slicing " + fn.function_name + " produced only added lines with no pre-image counterpart");
  return flow;
}

}  // namespace vtrace
