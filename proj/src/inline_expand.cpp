#include <map>

#include "vtrace/cfront.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/lexer.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace::cfront {

namespace {

const std::string kPlaceholder = "__vtrace_arg_";

void set_spans(Node& n, const SourceSpan& span) {
  n.span = span;
  for (auto& c : n.children) set_spans(c, span);
}

// Replaces placeholder identifiers with the bound argument subtrees. Body
// nodes take the call site's span; argument subtrees keep their own.
void bind_arguments(Node& n, const std::map<std::string, Node>& args, const SourceSpan& call_span) {
  if (n.kind == NodeKind::Identifier) {
    auto it = args.find(n.text);
    if (it != args.end()) {
      n = it->second;
      return;
    }
  }
  n.span = call_span;
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    if (n.kind == NodeKind::Member && i == 1) {
      n.children[i].span = call_span;
      continue;
    }
    bind_arguments(n.children[i], args, call_span);
  }
}

std::string argument_text(const Node& arg) {
  return arg.kind == NodeKind::Unknown ? arg.text : to_source(arg);
}

class Expander {
 public:
  Expander(const DefinitionSet& defs, const InlineConfig& cfg) : defs_(defs), cfg_(cfg) {}

  std::vector<std::string> warnings;

  void expand(Node& n, int depth) {
    // Children first, so argument subtrees are expanded at the caller's depth.
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      // Callee names and member fields are not macro uses.
      if (n.kind == NodeKind::Call && i == 0 && n.children[0].kind == NodeKind::Identifier) continue;
      if (n.kind == NodeKind::Member && i == 1) continue;
      if (n.kind == NodeKind::Declarator && i == 0) continue;
      if (n.kind == NodeKind::FunctionDef && i < 2) continue;
      expand(n.children[i], depth);
    }
    if (n.kind == NodeKind::Call && !n.children.empty() && n.children[0].kind == NodeKind::Identifier) {
      expand_call(n, depth);
    } else if (n.kind == NodeKind::Identifier && cfg_.expand_macros) {
      expand_object_macro(n, depth);
    }
  }

 private:
  bool over_depth(const Node& n, const std::string& name, int depth) {
    if (depth < cfg_.max_depth) return false;
    warnings.push_back("RecursionBound: '" + name + "' at line " + std::to_string(n.span.begin_line) +
                       " left unexpanded (max_depth " + std::to_string(cfg_.max_depth) + ")");
    return true;
  }

  void expand_call(Node& call, int depth) {
    const std::string name = call.children[0].text;
    std::vector<Node> args(call.children.begin() + 1, call.children.end());
    if (cfg_.expand_macros) {
      if (const auto* m = defs_.macro(name); m && m->function_like) {
        if (over_depth(call, name, depth)) return;
        if (auto body = substitute_macro(*m, args, call.span)) {
          call = std::move(*body);
          expand(call, depth + 1);
        }
        return;
      }
    }
    if (cfg_.expand_static_functions) {
      if (const auto* fn = defs_.function(name)) {
        if (over_depth(call, name, depth)) return;
        if (auto body = substitute_function(*fn, args, call.span)) {
          call = std::move(*body);
          expand(call, depth + 1);
        }
      }
    }
  }

  void expand_object_macro(Node& id, int depth) {
    const auto* m = defs_.macro(id.text);
    if (!m || m->function_like || m->body.empty()) return;
    auto parsed = parse_expression(m->body, id.span.begin_line);
    if (!parsed) return;
    // A macro that expands to itself (`#define x x`) is left alone.
    if (parsed->kind == NodeKind::Identifier && parsed->text == id.text) return;
    if (over_depth(id, id.text, depth)) return;
    set_spans(*parsed, id.span);
    id = std::move(*parsed);
    expand(id, depth + 1);
  }

  std::optional<Node> substitute_macro(const MacroDefinition& m, const std::vector<Node>& args,
                                       const SourceSpan& span) {
    if (!m.variadic && args.size() != m.params.size()) return std::nullopt;
    if (m.variadic && args.size() + 1 < m.params.size()) return std::nullopt;
    bool textual = m.body.find('#') != std::string::npos;
    std::map<std::string, Node> bound;
    std::map<std::string, std::string> text_for;
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      const bool va = m.variadic && i + 1 == m.params.size();
      if (va) {
        std::string joined;
        for (std::size_t j = i; j < args.size(); ++j) joined += (j > i ? ", " : "") + argument_text(args[j]);
        text_for[m.params[i]] = joined;
        textual = true;
      } else {
        text_for[m.params[i]] = argument_text(args[i]);
        if (args[i].kind == NodeKind::Unknown) textual = true;
        bound[kPlaceholder + std::to_string(i)] = args[i];
      }
    }
    std::string out;
    auto toks = tokenize(m.body, span.begin_line);
    for (std::size_t k = 0; k < toks.size(); ++k) {
      const auto& t = toks[k];
      if (t.kind == TokenKind::End) break;
      std::string piece = t.text;
      if (t.kind == TokenKind::Identifier) {
        for (std::size_t i = 0; i < m.params.size(); ++i) {
          if (m.params[i] != t.text) continue;
          piece = textual ? "(" + text_for[t.text] + ")" : kPlaceholder + std::to_string(i);
        }
      } else if (t.is("#") && k + 1 < toks.size() && text_for.count(toks[k + 1].text)) {
        piece = "\"" + text_for[toks[k + 1].text] + "\"";
        ++k;
      } else if (t.is("##")) {
        if (!out.empty() && out.back() == ' ') out.pop_back();
        continue;
      }
      out += piece;
      out += ' ';
    }
    auto expr = parse_expression(out, span.begin_line);
    if (expr) {
      bind_arguments(*expr, bound, span);
      return expr;
    }
    // Statement macros: do { ... } while (0) and friends.
    Node block = parse_statements(out, span.begin_line);
    if (block.children.empty()) return std::nullopt;
    bind_arguments(block, bound, span);
    return Node(NodeKind::Inlined, m.name, span, std::move(block.children));
  }

  std::optional<Node> substitute_function(const FunctionDefinition& fn, const std::vector<Node>& args,
                                          const SourceSpan& span) {
    std::vector<std::string> params;
    for (const auto& p : fn.params)
      if (p != "void" && p != "...") params.push_back(p);
    if (params.size() != args.size()) return std::nullopt;
    SyntaxTree tree;
    try {
      tree = parse_function_source(fn.source);
    } catch (const Unparseable&) {
      return std::nullopt;
    }
    Node body = tree.root->children[2];
    std::map<std::string, Node> bound;
    for (std::size_t i = 0; i < params.size(); ++i) bound[params[i]] = args[i];
    bind_arguments(body, bound, span);
    return Node(NodeKind::Inlined, fn.name, span, std::move(body.children));
  }

  const DefinitionSet& defs_;
  const InlineConfig& cfg_;
};

}  // namespace

InlineResult inline_expand(const SyntaxTree& tree, const DefinitionSet& defs, const InlineConfig& cfg) {
  InlineResult result;
  result.tree = tree;
  if (!tree.root || cfg.max_depth <= 0 || defs.empty()) return result;
  Expander ex(defs, cfg);
  ex.expand(*result.tree.root, 0);
  result.warnings = std::move(ex.warnings);
  return result;
}

}  // namespace vtrace::cfront
