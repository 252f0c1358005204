#include "vtrace/lexer.hpp"

#include <array>
#include <cctype>
#include <unordered_set>

namespace vtrace::cfront {

namespace {

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> kSet = {
      "auto",     "break",    "case",     "char",     "const",    "continue", "default",
      "do",       "double",   "else",     "enum",     "extern",   "float",    "for",
      "goto",     "if",       "inline",   "int",      "long",     "register", "restrict",
      "return",   "short",    "signed",   "sizeof",   "static",   "struct",   "switch",
      "typedef",  "union",    "unsigned", "void",     "volatile", "while",    "_Bool",
      "_Complex", "_Atomic",  "_Noreturn", "_Static_assert", "_Thread_local", "bool",
      "__inline", "__inline__", "__restrict", "__restrict__", "__volatile__", "__const"};
  return kSet;
}

const std::unordered_set<std::string_view>& type_keywords() {
  static const std::unordered_set<std::string_view> kSet = {
      "auto",   "char",     "const",    "double",   "enum",     "extern",   "float",
      "inline", "int",      "long",     "register", "restrict", "short",    "signed",
      "static", "struct",   "typedef",  "union",    "unsigned", "void",     "volatile",
      "_Bool",  "_Complex", "_Atomic",  "_Thread_local", "bool", "__inline", "__inline__",
      "__restrict", "__restrict__", "__const"};
  return kSet;
}

constexpr std::array<std::string_view, 24> kMultiPunct = {
    "...", "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&",  "||",  "+=",  "-=", "*=", "/=", "%=", "&=", "^=", "|=", "##", "::"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

class Lexer {
 public:
  Lexer(std::string_view src, int first_line) : src_(src), line_(first_line) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    bool at_line_start = true;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        advance();
        at_line_start = true;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      if (c == '\\' && peek(1) == '\n') {
        advance();
        advance();
        continue;
      }
      if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        advance();
        advance();
        while (pos_ < src_.size() && !(src_[pos_] == '*' && peek(1) == '/')) advance();
        if (pos_ < src_.size()) {
          advance();
          advance();
        }
        continue;
      }
      if (c == '#' && at_line_start) {
        out.push_back(directive());
        continue;
      }
      at_line_start = false;
      out.push_back(token());
    }
    Token end;
    end.kind = TokenKind::End;
    end.line = end.end_line = line_;
    end.col = end.end_col = col_;
    out.push_back(end);
    return out;
  }

 private:
  char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  Token start(TokenKind kind) {
    Token t;
    t.kind = kind;
    t.line = line_;
    t.col = col_;
    return t;
  }

  void finish(Token& t, std::size_t begin) {
    if (t.text.empty()) t.text = std::string(src_.substr(begin, pos_ - begin));
    t.end_line = line_;
    t.end_col = col_ > 1 ? col_ - 1 : col_;
  }

  Token directive() {
    Token t = start(TokenKind::Directive);
    std::size_t begin = pos_;
    std::string text;
    while (pos_ < src_.size() && src_[pos_] != '\n') {
      if (src_[pos_] == '\\' && peek(1) == '\n') {
        text += ' ';
        advance();
        advance();
        continue;
      }
      if (src_[pos_] == '/' && peek(1) == '*') {
        advance();
        advance();
        while (pos_ < src_.size() && !(src_[pos_] == '*' && peek(1) == '/')) advance();
        if (pos_ < src_.size()) {
          advance();
          advance();
        }
        text += ' ';
        continue;
      }
      if (src_[pos_] == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        break;
      }
      text += src_[pos_];
      advance();
    }
    t.text = text;
    finish(t, begin);
    return t;
  }

  void quoted(char quote) {
    advance();
    while (pos_ < src_.size() && src_[pos_] != quote && src_[pos_] != '\n') {
      if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) advance();
      advance();
    }
    if (pos_ < src_.size() && src_[pos_] == quote) advance();
  }

  Token token() {
    std::size_t begin = pos_;
    char c = src_[pos_];
    // String / char literal prefixes: L"", u8"", u"", U"".
    if (c == 'L' || c == 'u' || c == 'U') {
      std::size_t k = 1;
      if (c == 'u' && peek(1) == '8') k = 2;
      char q = peek(k);
      if (q == '"' || q == '\'') {
        Token t = start(q == '"' ? TokenKind::String : TokenKind::Char);
        for (std::size_t i = 0; i < k; ++i) advance();
        quoted(q);
        finish(t, begin);
        return t;
      }
    }
    if (ident_start(c)) {
      Token t = start(TokenKind::Identifier);
      while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
      finish(t, begin);
      if (is_c_keyword(t.text)) t.kind = TokenKind::Keyword;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      Token t = start(TokenKind::Number);
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if ((d == '+' || d == '-') && pos_ > begin) {
          char prev = src_[pos_ - 1];
          if (prev == 'e' || prev == 'E' || prev == 'p' || prev == 'P') {
            advance();
            continue;
          }
          break;
        }
        if (!(std::isalnum(static_cast<unsigned char>(d)) || d == '.' || d == '_' || d == '\'')) break;
        advance();
      }
      finish(t, begin);
      return t;
    }
    if (c == '"' || c == '\'') {
      Token t = start(c == '"' ? TokenKind::String : TokenKind::Char);
      quoted(c);
      finish(t, begin);
      return t;
    }
    Token t = start(TokenKind::Punct);
    for (auto p : kMultiPunct) {
      if (src_.substr(pos_, p.size()) == p) {
        for (std::size_t i = 0; i < p.size(); ++i) advance();
        finish(t, begin);
        return t;
      }
    }
    advance();
    finish(t, begin);
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_;
  int col_ = 1;
};

}  // namespace

bool is_c_keyword(std::string_view word) { return keywords().count(word) > 0; }

bool is_type_keyword(std::string_view word) { return type_keywords().count(word) > 0; }

std::vector<Token> tokenize(std::string_view source, int first_line) {
  return Lexer(source, first_line).run();
}

}  // namespace vtrace::cfront
