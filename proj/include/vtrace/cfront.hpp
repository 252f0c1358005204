#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtrace/parser.hpp"
#include "vtrace/syntax_tree.hpp"
#include "vtrace/types.hpp"

// C front-end: parsing, inline expansion, normalization and sequence
// serialization of syntax trees.
namespace vtrace::cfront {

struct MacroDefinition {
  std::string name;
  bool function_like = false;
  bool variadic = false;
  std::vector<std::string> params;
  std::string body;
};

struct FunctionDefinition {
  std::string name;
  std::vector<std::string> params;
  std::string source;
  bool is_static = false;
};

// Name -> definition text for macros and functions, gathered from one
// commit's sources. Later additions win over earlier ones.
class DefinitionSet {
 public:
  // Adds every `#define` and every function definition found in `source`.
  // With `static_only` set, non-static functions are ignored.
  void add_source(std::string_view source, bool static_only = false);

  // Adds a single definition: either a `#define ...` line or a function
  // definition.
  void add_definition_text(std::string_view text);

  void add_macro(MacroDefinition macro);
  void add_function(FunctionDefinition fn);

  const MacroDefinition* macro(std::string_view name) const;
  const FunctionDefinition* function(std::string_view name) const;

  bool empty() const { return macros_.empty() && functions_.empty(); }
  std::size_t size() const { return macros_.size() + functions_.size(); }

 private:
  std::map<std::string, MacroDefinition, std::less<>> macros_;
  std::map<std::string, FunctionDefinition, std::less<>> functions_;
};

// Parses one `#define` directive (with or without the leading '#').
std::optional<MacroDefinition> parse_macro_directive(std::string_view directive);

// Quoted `#include "..."` and angle `#include <...>` targets in order.
std::vector<std::string> include_targets(std::string_view source);

struct InlineConfig {
  int max_depth = 1;
  bool expand_macros = true;
  bool expand_static_functions = true;
};

struct InlineResult {
  SyntaxTree tree;
  std::vector<std::string> warnings;  // RecursionBound notices
};

SyntaxTree parse_function(const FunctionSnapshot& snapshot);

InlineResult inline_expand(const SyntaxTree& tree, const DefinitionSet& defs, const InlineConfig& cfg = {});

// Node spans survive normalization, so every normalized node maps back to
// the source range it came from.
struct NormalizedAst {
  SyntaxTree tree;
};

NormalizedAst normalize_ast(const SyntaxTree& tree);
Node normalize_node(const Node& node);

struct AstSequence {
  std::vector<std::string> labels;

  bool operator==(const AstSequence&) const = default;
};

AstSequence ast_to_sequence(const NormalizedAst& ast);
AstSequence node_sequence(const Node& node);

}  // namespace vtrace::cfront
