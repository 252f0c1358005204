#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtrace/lexer.hpp"
#include "vtrace/syntax_tree.hpp"

namespace vtrace::cfront {

// A function definition found in a translation unit.
struct FunctionLocation {
  std::string name;
  int begin_line = 0;  // first line of the declaration (return type)
  int body_line = 0;   // line of the opening brace
  int end_line = 0;    // line of the closing brace
  bool is_static = false;
};

// Finds top-level function definitions. Preprocessor directives, struct
// bodies and initializers are skipped; `extern "C"` / namespace blocks are
// entered. Line numbers are relative to `first_line`.
std::vector<FunctionLocation> locate_functions(std::string_view source, int first_line = 1);

// Parses the first function definition in `source`. Statements that fail to
// parse become Unknown nodes; throws Unparseable only when no definition is
// recoverable at all.
SyntaxTree parse_function_source(std::string_view source, int first_line = 1);

// Parses a statement fragment (one or more statements, braces balanced
// automatically) as if it were the body of an empty function. Returns the
// body Compound node.
Node parse_statements(std::string_view text, int first_line = 1);

// Parses a single expression; nullopt when the text is not an expression.
std::optional<Node> parse_expression(std::string_view text, int first_line = 1);

}  // namespace vtrace::cfront
