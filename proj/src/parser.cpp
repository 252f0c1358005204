#include "vtrace/parser.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "vtrace/errors.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace::cfront {

namespace {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool looks_like_type_name(std::string_view ident) {
  if (ident.size() > 2 && (ident.substr(ident.size() - 2) == "_t" || ident.substr(ident.size() - 2) == "_T")) return true;
  if (ident == "FILE" || ident == "va_list" || ident == "jmp_buf") return true;
  // CamelCase identifiers (AVFrame, MXFContext) are overwhelmingly types.
  if (!ident.empty() && std::isupper(static_cast<unsigned char>(ident[0]))) {
    bool has_lower = false;
    for (char c : ident) has_lower = has_lower || std::islower(static_cast<unsigned char>(c));
    return has_lower;
  }
  return false;
}

int binary_precedence(const Token& t) {
  if (t.kind != TokenKind::Punct) return -1;
  const auto& s = t.text;
  if (s == "||") return 1;
  if (s == "&&") return 2;
  if (s == "|") return 3;
  if (s == "^") return 4;
  if (s == "&") return 5;
  if (s == "==" || s == "!=") return 6;
  if (s == "<" || s == ">" || s == "<=" || s == ">=") return 7;
  if (s == "<<" || s == ">>") return 8;
  if (s == "+" || s == "-") return 9;
  if (s == "*" || s == "/" || s == "%") return 10;
  return -1;
}

bool is_assignment_op(const Token& t) {
  if (t.kind != TokenKind::Punct) return false;
  static const char* const kOps[] = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="};
  for (auto op : kOps)
    if (t.text == op) return true;
  return false;
}

SourceSpan span_of(const Token& first, const Token& last) {
  return SourceSpan{first.line, first.col, last.end_line, last.end_col};
}

SourceSpan join(const SourceSpan& a, const SourceSpan& b) {
  return SourceSpan{a.begin_line, a.begin_col, b.end_line, b.end_col};
}

class Parser {
 public:
  Parser(const std::vector<Token>& toks, std::size_t begin, std::size_t end)
      : toks_(toks), pos_(begin), end_(end) {}

  std::size_t position() const { return pos_; }

  bool at_end() const { return pos_ >= end_ || toks_[pos_].kind == TokenKind::End; }

  // ---- functions -------------------------------------------------------

  Node function_definition() {
    std::size_t header_begin = pos_;
    // Locate the body brace at depth 0.
    std::size_t brace = pos_;
    int depth = 0;
    while (brace < end_) {
      const auto& t = toks_[brace];
      if (t.is("(") || t.is("[")) ++depth;
      if (t.is(")") || t.is("]")) --depth;
      if (depth == 0 && t.is("{")) break;
      ++brace;
    }
    if (brace >= end_) throw ParseError("no function body");
    // The parameter list is the last balanced (...) group before the brace
    // whose opening paren follows an identifier.
    std::size_t close = brace;
    std::size_t open = brace;
    bool found = false;
    for (std::size_t i = brace; i-- > header_begin;) {
      if (!toks_[i].is(")")) continue;
      int d = 0;
      std::size_t j = i;
      for (;; --j) {
        if (toks_[j].is(")")) ++d;
        if (toks_[j].is("(")) --d;
        if (d == 0 || j == header_begin) break;
      }
      if (d == 0 && j > header_begin && toks_[j - 1].kind == TokenKind::Identifier) {
        close = i;
        open = j;
        found = true;
        break;
      }
    }
    if (!found) throw ParseError("no parameter list");
    const Token& name_tok = toks_[open - 1];
    Node name(NodeKind::Identifier, name_tok.text, span_of(name_tok, name_tok));
    Node params(NodeKind::ParamList, "", span_of(toks_[open], toks_[close]));
    std::size_t p = open + 1;
    while (p < close) {
      std::size_t q = p;
      int d = 0;
      std::string last_ident;
      const Token* last_tok = nullptr;
      while (q < close) {
        const auto& t = toks_[q];
        if (t.is("(") || t.is("[")) ++d;
        if (t.is(")") || t.is("]")) --d;
        if (d == 0 && t.is(",")) break;
        if (t.kind == TokenKind::Identifier && (d == 0 || (d == 1 && q > p && toks_[q - 1].is("*")))) {
          last_ident = t.text;
          last_tok = &t;
        }
        if (t.is("...")) {
          last_ident = "...";
          last_tok = &t;
        }
        ++q;
      }
      // A lone identifier is a type (e.g. `void` or an unnamed typedef'd param).
      if (last_tok && q - p > 1) params.children.emplace_back(NodeKind::Param, last_ident, span_of(*last_tok, *last_tok));
      else if (last_tok && last_ident == "...") params.children.emplace_back(NodeKind::Param, last_ident, span_of(*last_tok, *last_tok));
      p = q + 1;
    }
    pos_ = brace;
    Node body = compound();
    SourceSpan span = span_of(toks_[header_begin], toks_[pos_ - 1]);
    return Node(NodeKind::FunctionDef, name_tok.text, span, {std::move(name), std::move(params), std::move(body)});
  }

  // ---- statements ------------------------------------------------------

  Node compound() {
    const Token& open = expect("{");
    Node block(NodeKind::Compound, "", span_of(open, open));
    while (!at_end() && !peek().is("}")) {
      if (peek().kind == TokenKind::Directive) {
        ++pos_;
        continue;
      }
      block.children.push_back(statement_with_recovery());
    }
    const Token& close = at_end() ? toks_[pos_ - 1] : toks_[pos_++];
    block.span = span_of(open, close);
    return block;
  }

  Node statement_with_recovery() {
    std::size_t start = pos_;
    try {
      return statement();
    } catch (const ParseError&) {
      pos_ = start;
      return recover();
    }
  }

  Node statement() {
    while (!at_end() && peek().kind == TokenKind::Directive) ++pos_;
    if (at_end()) throw ParseError("unexpected end of input");
    const Token& t = peek();
    if (t.is("{")) return compound();
    if (t.is(";")) {
      ++pos_;
      return Node(NodeKind::Empty, "", span_of(t, t));
    }
    if (t.kind == TokenKind::Keyword) {
      if (t.text == "if") return if_statement();
      if (t.text == "while") return while_statement();
      if (t.text == "do") return do_statement();
      if (t.text == "for") return for_statement();
      if (t.text == "switch") return switch_statement();
      if (t.text == "case") return case_label();
      if (t.text == "default" && peek(1).is(":")) {
        pos_ += 2;
        return Node(NodeKind::Default, "", span_of(t, toks_[pos_ - 1]));
      }
      if (t.text == "return") return return_statement();
      if (t.text == "break" || t.text == "continue") {
        ++pos_;
        const Token& semi = expect(";");
        return Node(t.text == "break" ? NodeKind::Break : NodeKind::Continue, "", span_of(t, semi));
      }
      if (t.text == "goto") {
        ++pos_;
        const Token& label = expect_kind(TokenKind::Identifier);
        const Token& semi = expect(";");
        return Node(NodeKind::Goto, label.text, span_of(t, semi));
      }
    }
    if (t.kind == TokenKind::Identifier && peek(1).is(":") ) {
      pos_ += 2;
      return Node(NodeKind::Label, t.text, span_of(t, toks_[pos_ - 1]));
    }
    if (declaration_start()) return declaration();
    Node e = expression();
    if (peek().is(";")) {
      const Token& semi = toks_[pos_++];
      return Node(NodeKind::ExprStmt, "", join(e.span, span_of(semi, semi)), {std::move(e)});
    }
    // Statement-like macros (`FOREACH(x) { ... }`) omit the semicolon.
    if (peek().is("{") && e.kind == NodeKind::Call) return Node(NodeKind::ExprStmt, "", e.span, {std::move(e)});
    throw ParseError("expected ';'");
  }

  Node if_statement() {
    const Token& kw = toks_[pos_++];
    expect("(");
    Node cond = expression();
    expect(")");
    Node then_branch = statement_with_recovery();
    Node node(NodeKind::If, "", kw_span(kw), {std::move(cond), std::move(then_branch)});
    if (peek().is("else")) {
      ++pos_;
      node.children.push_back(statement_with_recovery());
    }
    node.span = span_of(kw, toks_[pos_ - 1]);
    return node;
  }

  Node while_statement() {
    const Token& kw = toks_[pos_++];
    expect("(");
    Node cond = expression();
    expect(")");
    Node body = statement_with_recovery();
    return Node(NodeKind::While, "", span_of(kw, toks_[pos_ - 1]), {std::move(cond), std::move(body)});
  }

  Node do_statement() {
    const Token& kw = toks_[pos_++];
    Node body = statement_with_recovery();
    if (!peek().is("while")) throw ParseError("expected while");
    ++pos_;
    expect("(");
    Node cond = expression();
    expect(")");
    const Token& semi = expect(";");
    return Node(NodeKind::DoWhile, "", span_of(kw, semi), {std::move(body), std::move(cond)});
  }

  Node for_statement() {
    const Token& kw = toks_[pos_++];
    const Token& open = expect("(");
    Node init;
    if (peek().is(";")) {
      const Token& semi = toks_[pos_++];
      init = Node(NodeKind::Empty, "", span_of(semi, semi));
    } else if (declaration_start()) {
      init = declaration();
    } else {
      Node e = expression();
      const Token& semi = expect(";");
      init = Node(NodeKind::ExprStmt, "", join(e.span, span_of(semi, semi)), {std::move(e)});
    }
    Node cond;
    if (peek().is(";")) {
      cond = Node(NodeKind::Empty, "", span_of(peek(), peek()));
    } else {
      cond = expression();
    }
    expect(";");
    Node step;
    if (peek().is(")")) {
      step = Node(NodeKind::Empty, "", span_of(peek(), peek()));
    } else {
      step = expression();
    }
    expect(")");
    (void)open;
    Node body = statement_with_recovery();
    return Node(NodeKind::For, "", span_of(kw, toks_[pos_ - 1]),
                {std::move(init), std::move(cond), std::move(step), std::move(body)});
  }

  Node switch_statement() {
    const Token& kw = toks_[pos_++];
    expect("(");
    Node cond = expression();
    expect(")");
    Node body = statement_with_recovery();
    return Node(NodeKind::Switch, "", span_of(kw, toks_[pos_ - 1]), {std::move(cond), std::move(body)});
  }

  Node case_label() {
    const Token& kw = toks_[pos_++];
    Node value = conditional();
    if (peek().is("...")) {  // GNU case ranges
      ++pos_;
      Node hi = conditional();
      value = Node(NodeKind::Binary, "...", join(value.span, hi.span), {std::move(value), std::move(hi)});
    }
    const Token& colon = expect(":");
    return Node(NodeKind::Case, "", span_of(kw, colon), {std::move(value)});
  }

  Node return_statement() {
    const Token& kw = toks_[pos_++];
    if (peek().is(";")) {
      const Token& semi = toks_[pos_++];
      return Node(NodeKind::Return, "", span_of(kw, semi));
    }
    Node value = expression();
    const Token& semi = expect(";");
    return Node(NodeKind::Return, "", span_of(kw, semi), {std::move(value)});
  }

  bool declaration_start() const {
    const Token& t0 = peek();
    if (t0.kind == TokenKind::Keyword) return is_type_keyword(t0.text);
    if (t0.kind != TokenKind::Identifier) return false;
    const Token& t1 = peek(1);
    if (t1.kind == TokenKind::Identifier) return true;
    if (t1.kind == TokenKind::Keyword && is_type_keyword(t1.text)) return true;
    if (t1.is("*")) {
      std::size_t k = pos_ + 1;
      while (k < end_ && (toks_[k].is("*") || toks_[k].is("const") || toks_[k].is("restrict"))) ++k;
      if (k + 1 < end_ && toks_[k].kind == TokenKind::Identifier) {
        const Token& after = toks_[k + 1];
        return after.is("=") || after.is(";") || after.is(",") || after.is("[") || after.is(")");
      }
    }
    return false;
  }

  Node declaration() {
    const Token& first = peek();
    std::string type;
    auto add_type = [&](const std::string& s) {
      if (!type.empty()) type += ' ';
      type += s;
    };
    bool have_base = false;
    while (!at_end()) {
      const Token& t = peek();
      if (t.kind == TokenKind::Keyword && is_type_keyword(t.text)) {
        ++pos_;
        add_type(t.text);
        if (t.text == "struct" || t.text == "union" || t.text == "enum") {
          if (peek().kind == TokenKind::Identifier) add_type(toks_[pos_++].text);
          if (peek().is("{")) skip_balanced("{", "}");
          have_base = true;
        } else if (t.text != "const" && t.text != "static" && t.text != "volatile" && t.text != "extern" &&
                   t.text != "register" && t.text != "inline" && t.text != "restrict" && t.text != "auto") {
          have_base = true;
        }
        continue;
      }
      if (t.kind == TokenKind::Identifier && t.text == "__attribute__") {
        ++pos_;
        if (peek().is("(")) skip_balanced("(", ")");
        continue;
      }
      if (t.kind == TokenKind::Identifier) {
        const Token& next = peek(1);
        bool next_continues = next.kind == TokenKind::Identifier || next.is("*") ||
                              (next.kind == TokenKind::Keyword && is_type_keyword(next.text));
        if (!have_base && next_continues) {
          ++pos_;
          add_type(t.text);
          have_base = true;
          continue;
        }
      }
      break;
    }
    Node decl(NodeKind::Decl, "", span_of(first, first));
    decl.children.emplace_back(NodeKind::TypeName, type, span_of(first, toks_[pos_ > 0 ? pos_ - 1 : 0]));
    while (true) {
      while (peek().is("*") || peek().is("const") || peek().is("restrict") || peek().is("volatile") ||
             peek().is("__restrict")) {
        if (peek().is("*")) decl.children[0].text += "*";
        ++pos_;
      }
      const Token* name_tok = nullptr;
      if (peek().is("(") && peek(1).is("*")) {
        pos_ += 2;
        while (peek().is("*")) ++pos_;
        name_tok = &expect_kind(TokenKind::Identifier);
        expect(")");
        if (peek().is("(")) skip_balanced("(", ")");
      } else {
        name_tok = &expect_kind(TokenKind::Identifier);
      }
      Node declarator(NodeKind::Declarator, "", span_of(*name_tok, *name_tok));
      declarator.children.emplace_back(NodeKind::Identifier, name_tok->text, span_of(*name_tok, *name_tok));
      while (peek().is("[")) skip_balanced("[", "]");
      if (peek().is("(")) skip_balanced("(", ")");
      while (peek().kind == TokenKind::Identifier && peek().text == "__attribute__") {
        ++pos_;
        if (peek().is("(")) skip_balanced("(", ")");
      }
      if (peek().is("=")) {
        ++pos_;
        Node init = peek().is("{") ? init_list() : assignment();
        declarator.span = join(declarator.span, init.span);
        declarator.children.push_back(std::move(init));
      }
      decl.children.push_back(std::move(declarator));
      if (peek().is(",")) {
        ++pos_;
        continue;
      }
      break;
    }
    const Token& semi = expect(";");
    decl.span = span_of(first, semi);
    return decl;
  }

  // Skips to the end of the current statement after a parse error.
  Node recover() {
    std::size_t start = pos_;
    int depth = 0;
    std::string text;
    while (!at_end()) {
      const Token& t = peek();
      if (depth == 0 && t.is("}")) break;
      if (t.is("(") || t.is("[")) ++depth;
      if (t.is(")") || t.is("]")) depth = std::max(0, depth - 1);
      if (depth == 0 && t.is("{")) {
        skip_balanced("{", "}");
        break;
      }
      if (t.kind != TokenKind::Directive) {
        if (!text.empty()) text += ' ';
        text += t.text;
      }
      ++pos_;
      if (depth == 0 && t.is(";")) break;
    }
    if (pos_ == start && !at_end()) ++pos_;  // always make progress
    const Token& last = toks_[pos_ > start ? pos_ - 1 : start];
    return Node(NodeKind::Unknown, squeeze_whitespace(text), span_of(toks_[start], last));
  }

  // ---- expressions -----------------------------------------------------

  Node expression() {
    Node left = assignment();
    while (peek().is(",")) {
      ++pos_;
      Node right = assignment();
      SourceSpan s = join(left.span, right.span);
      left = Node(NodeKind::Comma, ",", s, {std::move(left), std::move(right)});
    }
    return left;
  }

  Node assignment() {
    Node left = conditional();
    if (is_assignment_op(peek())) {
      std::string op = toks_[pos_++].text;
      Node right = assignment();
      SourceSpan s = join(left.span, right.span);
      return Node(NodeKind::Assign, op, s, {std::move(left), std::move(right)});
    }
    return left;
  }

  Node conditional() {
    Node cond = binary(1);
    if (!peek().is("?")) return cond;
    ++pos_;
    Node then_value = peek().is(":") ? cond : expression();
    expect(":");
    Node else_value = conditional();
    SourceSpan s = join(cond.span, else_value.span);
    return Node(NodeKind::Conditional, "", s, {std::move(cond), std::move(then_value), std::move(else_value)});
  }

  Node binary(int min_prec) {
    Node left = unary();
    while (true) {
      int prec = binary_precedence(peek());
      if (prec < min_prec) break;
      std::string op = toks_[pos_++].text;
      Node right = binary(prec + 1);
      SourceSpan s = join(left.span, right.span);
      left = Node(NodeKind::Binary, op, s, {std::move(left), std::move(right)});
    }
    return left;
  }

  bool cast_ahead() const {
    if (!peek().is("(")) return false;
    const Token& t1 = peek(1);
    if (t1.kind == TokenKind::Keyword) return is_type_keyword(t1.text);
    if (t1.kind != TokenKind::Identifier) return false;
    std::size_t k = pos_ + 2;
    bool stars = false;
    while (k < end_ && (toks_[k].is("*") || toks_[k].is("const"))) {
      stars = stars || toks_[k].is("*");
      ++k;
    }
    if (k >= end_ || !toks_[k].is(")")) return false;
    if (stars) return true;
    const Token& after = k + 1 < end_ ? toks_[k + 1] : toks_[k];
    switch (after.kind) {
      case TokenKind::Identifier:
      case TokenKind::Number:
      case TokenKind::String:
      case TokenKind::Char:
        return true;
      case TokenKind::Keyword:
        return after.text == "sizeof";
      default:
        break;
    }
    if (after.is("!") || after.is("~")) return true;
    if (after.is("(") || after.is("-") || after.is("+") || after.is("*") || after.is("&") || after.is("{"))
      return looks_like_type_name(t1.text);
    return false;
  }

  Node type_name_until_paren() {
    // At the token after '('; consumes through the matching ')'.
    const Token& first = peek();
    std::string text;
    int depth = 0;
    while (!at_end()) {
      const Token& t = peek();
      if (t.is("(")) ++depth;
      if (t.is(")")) {
        if (depth == 0) break;
        --depth;
      }
      if (!text.empty() && !t.is("*")) text += ' ';
      text += t.text;
      ++pos_;
    }
    const Token& last = toks_[pos_ - 1];
    expect(")");
    return Node(NodeKind::TypeName, text, span_of(first, last));
  }

  bool sizeof_type_ahead() const {
    if (!peek().is("(")) return false;
    const Token& t1 = peek(1);
    if (t1.kind == TokenKind::Keyword) return is_type_keyword(t1.text);
    if (t1.kind != TokenKind::Identifier) return false;
    const Token& t2 = peek(2);
    if (t2.is("*")) return true;
    if (t2.is(")")) return looks_like_type_name(t1.text);
    return t2.kind == TokenKind::Identifier;
  }

  Node unary() {
    const Token& t = peek();
    if (t.kind == TokenKind::Punct &&
        (t.text == "++" || t.text == "--" || t.text == "-" || t.text == "+" || t.text == "!" || t.text == "~" ||
         t.text == "*" || t.text == "&")) {
      ++pos_;
      Node operand = unary();
      SourceSpan s = join(span_of(t, t), operand.span);
      return Node(NodeKind::Unary, t.text, s, {std::move(operand)});
    }
    if (t.is("sizeof") || (t.kind == TokenKind::Identifier && (t.text == "_Alignof" || t.text == "__alignof__"))) {
      ++pos_;
      if (sizeof_type_ahead()) {
        ++pos_;
        Node type = type_name_until_paren();
        SourceSpan s = join(span_of(t, t), type.span);
        return Node(NodeKind::Sizeof, "", s, {std::move(type)});
      }
      Node operand = unary();
      SourceSpan s = join(span_of(t, t), operand.span);
      return Node(NodeKind::Sizeof, "", s, {std::move(operand)});
    }
    if (cast_ahead()) {
      const Token& open = toks_[pos_++];
      Node type = type_name_until_paren();
      Node operand = peek().is("{") ? init_list() : unary();
      SourceSpan s = join(span_of(open, open), operand.span);
      return Node(NodeKind::Cast, "", s, {std::move(type), std::move(operand)});
    }
    return postfix();
  }

  Node postfix() {
    Node e = primary();
    while (true) {
      const Token& t = peek();
      if (t.is("(")) {
        ++pos_;
        Node call(NodeKind::Call, "", e.span, {std::move(e)});
        while (!peek().is(")")) {
          call.children.push_back(argument());
          if (peek().is(",")) {
            ++pos_;
            continue;
          }
          if (!peek().is(")")) throw ParseError("expected ')' in call");
        }
        const Token& close = toks_[pos_++];
        call.span = join(call.span, span_of(close, close));
        e = std::move(call);
      } else if (t.is("[")) {
        ++pos_;
        Node index = expression();
        const Token& close = expect("]");
        SourceSpan s = join(e.span, span_of(close, close));
        e = Node(NodeKind::Index, "", s, {std::move(e), std::move(index)});
      } else if (t.is(".") || t.is("->")) {
        ++pos_;
        const Token& field = expect_kind(TokenKind::Identifier);
        SourceSpan s = join(e.span, span_of(field, field));
        e = Node(NodeKind::Member, t.text, s,
                 {std::move(e), Node(NodeKind::Identifier, field.text, span_of(field, field))});
      } else if (t.is("++") || t.is("--")) {
        ++pos_;
        SourceSpan s = join(e.span, span_of(t, t));
        e = Node(NodeKind::Postfix, t.text, s, {std::move(e)});
      } else {
        break;
      }
    }
    return e;
  }

  // Macro arguments may be type names or other non-expressions; those are
  // kept verbatim as Unknown leaves.
  Node argument() {
    std::size_t start = pos_;
    try {
      Node arg = assignment();
      if (peek().is(",") || peek().is(")")) return arg;
    } catch (const ParseError&) {
    }
    pos_ = start;
    int depth = 0;
    std::string text;
    while (!at_end()) {
      const Token& t = peek();
      if (depth == 0 && (t.is(",") || t.is(")"))) break;
      if (t.is("(") || t.is("[") || t.is("{")) ++depth;
      if (t.is(")") || t.is("]") || t.is("}")) --depth;
      if (!text.empty()) text += ' ';
      text += t.text;
      ++pos_;
    }
    if (pos_ == start) throw ParseError("empty argument");
    return Node(NodeKind::Unknown, text, span_of(toks_[start], toks_[pos_ - 1]));
  }

  Node init_list() {
    const Token& open = expect("{");
    Node list(NodeKind::InitList, "", span_of(open, open));
    while (!at_end() && !peek().is("}")) {
      // Designators: .field = value, [index] = value
      if (peek().is(".") && peek(1).kind == TokenKind::Identifier && peek(2).is("=")) pos_ += 3;
      if (peek().is("[")) {
        skip_balanced("[", "]");
        if (peek().is("=")) ++pos_;
      }
      list.children.push_back(peek().is("{") ? init_list() : assignment());
      if (peek().is(",")) ++pos_;
      else break;
    }
    const Token& close = expect("}");
    list.span = span_of(open, close);
    return list;
  }

  Node primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Identifier:
        ++pos_;
        return Node(NodeKind::Identifier, t.text, span_of(t, t));
      case TokenKind::Number:
        ++pos_;
        return Node(NodeKind::Number, t.text, span_of(t, t));
      case TokenKind::Char:
        ++pos_;
        return Node(NodeKind::Char, t.text, span_of(t, t));
      case TokenKind::String: {
        ++pos_;
        std::string text = t.text;
        const Token* last = &t;
        // Adjacent literals and format macros: "%" PRId64 "\n"
        while (true) {
          if (peek().kind == TokenKind::String) {
            text += ' ' + peek().text;
            last = &toks_[pos_++];
          } else if (peek().kind == TokenKind::Identifier && peek(1).kind == TokenKind::String) {
            text += ' ' + peek().text + ' ' + peek(1).text;
            last = &toks_[pos_ + 1];
            pos_ += 2;
          } else {
            break;
          }
        }
        return Node(NodeKind::String, text, span_of(t, *last));
      }
      case TokenKind::Punct:
        if (t.is("(")) {
          ++pos_;
          Node inner = expression();
          expect(")");
          return inner;
        }
        if (t.is("{")) return init_list();
        break;
      default:
        break;
    }
    throw ParseError("unexpected token '" + t.text + "'");
  }

  // ---- helpers ---------------------------------------------------------

  const Token& peek(std::size_t k = 0) const {
    std::size_t i = pos_ + k;
    if (i >= end_) return sentinel();
    return toks_[i];
  }

  static const Token& sentinel() {
    static const Token kEnd{};
    return kEnd;
  }

  const Token& expect(std::string_view s) {
    if (!peek().is(s)) throw ParseError("expected '" + std::string(s) + "'");
    return toks_[pos_++];
  }

  const Token& expect_kind(TokenKind kind) {
    if (peek().kind != kind) throw ParseError("unexpected token");
    return toks_[pos_++];
  }

  void skip_balanced(std::string_view open, std::string_view close) {
    int depth = 0;
    while (!at_end()) {
      const Token& t = toks_[pos_++];
      if (t.is(open)) ++depth;
      if (t.is(close) && --depth == 0) return;
    }
  }

  SourceSpan kw_span(const Token& t) const { return span_of(t, t); }

 private:
  const std::vector<Token>& toks_;
  std::size_t pos_;
  std::size_t end_;
};

struct LocatedRange {
  FunctionLocation location;
  std::size_t begin = 0;  // first token of the declaration
  std::size_t end = 0;    // one past the closing brace
};

std::size_t matching(const std::vector<Token>& toks, std::size_t open_index, std::string_view open,
                     std::string_view close) {
  int depth = 0;
  for (std::size_t i = open_index; i < toks.size(); ++i) {
    if (toks[i].is(open)) ++depth;
    if (toks[i].is(close) && --depth == 0) return i;
  }
  return toks.size() - 1;
}

std::vector<LocatedRange> locate(const std::vector<Token>& toks) {
  std::vector<LocatedRange> out;
  std::size_t decl_start = 0;
  std::size_t i = 0;
  while (i < toks.size() && toks[i].kind != TokenKind::End) {
    const Token& t = toks[i];
    if (t.kind == TokenKind::Directive || t.is(";") || t.is("}")) {
      decl_start = i + 1;
      ++i;
      continue;
    }
    if (!t.is("{")) {
      if (t.is("(")) {
        i = matching(toks, i, "(", ")") + 1;
        continue;
      }
      ++i;
      continue;
    }
    // Transparent scopes.
    bool transparent = (i >= 2 && toks[i - 2].is("extern") && toks[i - 1].kind == TokenKind::String) ||
                       (i >= 2 && toks[i - 2].text == "namespace") || (i >= 1 && toks[i - 1].text == "namespace");
    if (transparent) {
      decl_start = i + 1;
      ++i;
      continue;
    }
    // Function definition: `name ( ... ) [qualifiers] {` with no '=' before.
    bool is_function = false;
    std::string name;
    bool has_assign = false;
    for (std::size_t k = decl_start; k < i; ++k)
      if (toks[k].is("=")) has_assign = true;
    if (!has_assign) {
      std::size_t k = i;
      while (k > decl_start) {
        const Token& p = toks[k - 1];
        if (p.is(")")) break;
        if (p.kind == TokenKind::Identifier || p.kind == TokenKind::Keyword) {
          --k;
          continue;
        }
        k = decl_start;
        break;
      }
      if (k > decl_start && toks[k - 1].is(")")) {
        // Walk back over trailing attribute groups to the parameter list.
        std::size_t close = k - 1;
        while (true) {
          int depth = 0;
          std::size_t open = close;
          for (;; --open) {
            if (toks[open].is(")")) ++depth;
            if (toks[open].is("(")) --depth;
            if (depth == 0 || open == decl_start) break;
          }
          if (depth != 0 || open == decl_start) break;
          const Token& before = toks[open - 1];
          if (before.kind == TokenKind::Identifier && before.text != "__attribute__" && before.text != "throw" &&
              before.text != "noexcept") {
            name = before.text;
            is_function = true;
            break;
          }
          if (open >= 2 && before.text == "__attribute__" && toks[open - 2].is(")")) {
            close = open - 2;
            continue;
          }
          break;
        }
      }
    }
    std::size_t close_brace = matching(toks, i, "{", "}");
    if (is_function) {
      LocatedRange r;
      r.location.name = name;
      r.location.begin_line = toks[decl_start].line;
      r.location.body_line = t.line;
      r.location.end_line = toks[close_brace].line;
      for (std::size_t k = decl_start; k < i; ++k)
        if (toks[k].is("static")) r.location.is_static = true;
      r.begin = decl_start;
      r.end = close_brace + 1;
      out.push_back(r);
    }
    i = close_brace + 1;
    decl_start = i;
    if (!is_function) {
      // Struct bodies and initializers continue until ';'. Anything that
      // looks like a new definition ends the skip early.
      std::size_t k = i;
      while (k < toks.size() && toks[k].kind != TokenKind::End && !toks[k].is(";") && !toks[k].is("{") &&
             toks[k].kind != TokenKind::Directive)
        ++k;
      if (k < toks.size() && toks[k].is(";")) {
        i = k + 1;
        decl_start = i;
      }
    }
  }
  return out;
}

int count_braces(std::string_view text) {
  int balance = 0;
  for (const auto& t : tokenize(text)) {
    if (t.is("{")) ++balance;
    if (t.is("}")) --balance;
  }
  return balance;
}

}  // namespace

std::vector<FunctionLocation> locate_functions(std::string_view source, int first_line) {
  auto toks = tokenize(source, first_line);
  std::vector<FunctionLocation> out;
  for (auto& r : locate(toks)) out.push_back(r.location);
  return out;
}

SyntaxTree parse_function_source(std::string_view source, int first_line) {
  auto toks = tokenize(source, first_line);
  auto ranges = locate(toks);
  if (ranges.empty()) throw Unparseable("no function definition found");
  const auto& r = ranges.front();
  Parser parser(toks, r.begin, r.end);
  try {
    return SyntaxTree{parser.function_definition()};
  } catch (const ParseError& e) {
    throw Unparseable(std::string("function definition not recoverable: ") + e.what());
  }
}

Node parse_statements(std::string_view text, int first_line) {
  std::string body(text);
  int balance = count_braces(body);
  for (int i = 0; i < balance; ++i) body += "\n}";
  // A leading brace is added on its own line before `first_line` so spans
  // keep the caller's numbering.
  std::string wrapped = "{\n" + body + "\n}";
  if (balance < 0) wrapped = std::string(static_cast<std::size_t>(-balance), '{') + wrapped;
  auto toks = tokenize(wrapped, first_line - 1);
  Parser parser(toks, 0, toks.size());
  return parser.compound();
}

std::optional<Node> parse_expression(std::string_view text, int first_line) {
  auto toks = tokenize(text, first_line);
  if (toks.size() <= 1) return std::nullopt;
  Parser parser(toks, 0, toks.size());
  try {
    Node e = parser.expression();
    if (!parser.at_end()) return std::nullopt;
    return e;
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

}  // namespace vtrace::cfront
