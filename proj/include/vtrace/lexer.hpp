#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vtrace::cfront {

enum class TokenKind { Identifier, Keyword, Number, String, Char, Punct, Directive, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  int line = 0;
  int col = 0;
  int end_line = 0;
  int end_col = 0;

  bool is(std::string_view s) const {
    return (kind == TokenKind::Punct || kind == TokenKind::Keyword) && text == s;
  }
};

bool is_c_keyword(std::string_view word);

// Keywords that can start or continue a declaration's type specifier.
bool is_type_keyword(std::string_view word);

// Error tolerant C/C++ tokenizer. Comments are dropped; preprocessor
// directives become single Directive tokens (continuations joined). Unknown
// bytes are emitted as one-character Punct tokens. `first_line` is the line
// number assigned to the first line of `source`.
std::vector<Token> tokenize(std::string_view source, int first_line = 1);

}  // namespace vtrace::cfront
