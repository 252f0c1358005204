#include <cctype>

#include "vtrace/cfront.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/lexer.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

std::string_view to_string(SnapshotRole role) {
  switch (role) {
    case SnapshotRole::Vulnerable: return "vulnerable";
    case SnapshotRole::Refactored: return "refactored";
    case SnapshotRole::Patched: return "patched";
    case SnapshotRole::Unknown: return "unknown";
  }
  return "unknown";
}

std::string FunctionSnapshot::text() const { return join_lines(lines); }

}  // namespace vtrace

namespace vtrace::cfront {

std::optional<MacroDefinition> parse_macro_directive(std::string_view directive) {
  std::string_view s = trim(directive);
  if (!s.empty() && s.front() == '#') s.remove_prefix(1);
  s = trim(s);
  if (!starts_with(s, "define")) return std::nullopt;
  s.remove_prefix(6);
  if (s.empty() || !std::isspace(static_cast<unsigned char>(s.front()))) return std::nullopt;
  s = trim(s);
  std::size_t i = 0;
  while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
  if (i == 0) return std::nullopt;
  MacroDefinition m;
  m.name = std::string(s.substr(0, i));
  s.remove_prefix(i);
  if (!s.empty() && s.front() == '(') {
    m.function_like = true;
    auto close = s.find(')');
    if (close == std::string_view::npos) return std::nullopt;
    std::string_view params = s.substr(1, close - 1);
    std::size_t start = 0;
    while (start <= params.size()) {
      auto comma = params.find(',', start);
      auto p = trim(params.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (!p.empty()) {
        if (p == "...") {
          m.variadic = true;
          m.params.emplace_back("__VA_ARGS__");
        } else {
          m.params.emplace_back(p);
        }
      }
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    s.remove_prefix(close + 1);
  }
  m.body = std::string(trim(s));
  return m;
}

std::vector<std::string> include_targets(std::string_view source) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(source)) {
    if (t.kind != TokenKind::Directive) continue;
    std::string_view d = trim(std::string_view(t.text).substr(1));
    if (!starts_with(d, "include")) continue;
    d = trim(d.substr(7));
    if (d.size() < 2) continue;
    char close = d.front() == '"' ? '"' : (d.front() == '<' ? '>' : '\0');
    if (!close) continue;
    auto end = d.find(close, 1);
    if (end == std::string_view::npos) continue;
    out.emplace_back(d.substr(1, end - 1));
  }
  return out;
}

void DefinitionSet::add_macro(MacroDefinition macro) {
  auto name = macro.name;
  macros_[name] = std::move(macro);
}

void DefinitionSet::add_function(FunctionDefinition fn) {
  auto name = fn.name;
  functions_[name] = std::move(fn);
}

void DefinitionSet::add_source(std::string_view source, bool static_only) {
  auto lines = split_lines(source);
  for (const auto& t : tokenize(source)) {
    if (t.kind != TokenKind::Directive) continue;
    if (auto m = parse_macro_directive(t.text)) add_macro(std::move(*m));
  }
  for (const auto& loc : locate_functions(source)) {
    if (static_only && !loc.is_static) continue;
    std::string text;
    for (int l = loc.begin_line; l <= loc.end_line && l <= static_cast<int>(lines.size()); ++l) {
      text += lines[static_cast<std::size_t>(l - 1)];
      text += '\n';
    }
    FunctionDefinition fn;
    fn.name = loc.name;
    fn.source = text;
    fn.is_static = loc.is_static;
    try {
      auto tree = parse_function_source(text);
      for (const auto& p : tree.root->children[1].children) fn.params.push_back(p.text);
    } catch (const Unparseable&) {
      continue;
    }
    add_function(std::move(fn));
  }
}

void DefinitionSet::add_definition_text(std::string_view text) {
  auto t = trim(text);
  if (!t.empty() && t.front() == '#') {
    add_source(text);
    return;
  }
  if (auto m = parse_macro_directive("#" + std::string(t)); m && starts_with(t, "define")) {
    add_macro(std::move(*m));
    return;
  }
  add_source(text);
}

const MacroDefinition* DefinitionSet::macro(std::string_view name) const {
  auto it = macros_.find(name);
  return it == macros_.end() ? nullptr : &it->second;
}

const FunctionDefinition* DefinitionSet::function(std::string_view name) const {
  auto it = functions_.find(name);
  return it == functions_.end() ? nullptr : &it->second;
}

SyntaxTree parse_function(const FunctionSnapshot& snapshot) {
  if (snapshot.lines.empty()) throw Unparseable("empty function snapshot");
  return parse_function_source(snapshot.text(), snapshot.first_line);
}

}  // namespace vtrace::cfront
