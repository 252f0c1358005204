#include "vtrace/weighting.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

#include "vtrace/embedded_data.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/lexer.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

using cfront::Node;
using cfront::NodeKind;
using json = nlohmann::json;

SensitiveFunctionTable SensitiveFunctionTable::defaults() {
  static const SensitiveFunctionTable table = from_json(embedded::sensitive_functions());
  return table;
}

SensitiveFunctionTable SensitiveFunctionTable::from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("sensitive function table: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("sensitive function table must be a JSON object");
  SensitiveFunctionTable t;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_array()) throw ConfigError("sensitive function row '" + it.key() + "' must be an array");
    std::set<std::string> seen;
    auto& row = t.entries[it.key()];
    for (const auto& n : it.value()) {
      if (!n.is_string()) throw ConfigError("sensitive function row '" + it.key() + "' holds a non-string");
      if (!seen.insert(n.get<std::string>()).second)
        throw ConfigError("duplicate name '" + n.get<std::string>() + "' in row '" + it.key() + "'");
      row.push_back(n.get<std::string>());
    }
  }
  return t;
}

void SensitiveFunctionTable::merge(const SensitiveFunctionTable& other) {
  for (const auto& [type, names] : other.entries) {
    auto& row = entries[type];
    for (const auto& n : names)
      if (std::find(row.begin(), row.end(), n) == row.end()) row.push_back(n);
  }
}

std::optional<std::string> vulnerability_type_for_cwe(std::string_view cwe_id) {
  static const json map = json::parse(embedded::cwe_types());
  std::string key(trim(cwe_id));
  if (key.empty()) return std::nullopt;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::toupper(c); });
  if (!starts_with(key, "CWE-")) key = "CWE-" + key;
  auto it = map.find(key);
  if (it == map.end()) return std::nullopt;
  return it->get<std::string>();
}

std::string_view to_string(GatingMode mode) {
  switch (mode) {
    case GatingMode::GatedWithFallback: return "gated_with_fallback";
    case GatingMode::GatedStrict: return "gated_strict";
    case GatingMode::Ungated: return "ungated";
  }
  return "gated_with_fallback";
}

GatingMode gating_mode_from_string(std::string_view s) {
  if (s == "gated_with_fallback") return GatingMode::GatedWithFallback;
  if (s == "gated_strict") return GatingMode::GatedStrict;
  if (s == "ungated") return GatingMode::Ungated;
  throw ConfigError("unknown gating mode '" + std::string(s) + "'");
}

std::vector<std::string> called_functions(const Node& stmt) {
  std::vector<std::string> out;
  cfront::visit_preorder(stmt, [&](const Node& n) {
    if (n.kind == NodeKind::Call && !n.children.empty() && n.children[0].kind == NodeKind::Identifier) {
      if (std::find(out.begin(), out.end(), n.children[0].text) == out.end()) out.push_back(n.children[0].text);
    } else if (n.kind == NodeKind::Unknown) {
      auto toks = cfront::tokenize(n.text);
      for (std::size_t i = 0; i + 1 < toks.size(); ++i)
        if (toks[i].kind == cfront::TokenKind::Identifier && toks[i + 1].is("(") &&
            std::find(out.begin(), out.end(), toks[i].text) == out.end())
          out.push_back(toks[i].text);
    }
  });
  return out;
}

namespace {

std::vector<std::string> macro_calls(const cfront::MacroDefinition& m) {
  std::vector<std::string> out;
  auto toks = cfront::tokenize(m.body);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i)
    if (toks[i].kind == cfront::TokenKind::Identifier && toks[i + 1].is("(")) out.push_back(toks[i].text);
  return out;
}

// Callees of a repository function or macro, parsed on demand.
std::vector<std::string> callees_of(const std::string& name, const cfront::DefinitionSet& defs) {
  if (const auto* fn = defs.function(name)) {
    try {
      auto tree = cfront::parse_function_source(fn->source);
      if (tree.root) return called_functions(*tree.root);
    } catch (const Error&) {
    }
    return {};
  }
  if (const auto* m = defs.macro(name)) return macro_calls(*m);
  return {};
}

const char* operator_pattern(std::string_view op) {
  if (op == "+" || op == "+=") return "add";
  if (op == "*" || op == "*=") return "multiple";
  if (op == "<<" || op == "<<=") return "bit-shifting";
  return nullptr;
}

std::optional<std::string> find_operator(const Node& stmt, const std::set<std::string>& patterns) {
  std::optional<std::string> hit;
  cfront::visit_preorder(stmt, [&](const Node& n) {
    if (hit) return;
    if ((n.kind == NodeKind::Binary || n.kind == NodeKind::Assign) && n.children.size() == 2)
      if (const char* p = operator_pattern(n.text); p && patterns.count(p)) hit = p;
  });
  return hit;
}

std::optional<std::string> find_call(const std::vector<std::string>& direct, const std::set<std::string>& names,
                                     const cfront::DefinitionSet& defs, int depth) {
  for (const auto& c : direct)
    if (names.count(c)) return c;
  // Wrapper lookup, breadth first so the shallowest hit wins.
  std::set<std::string> seen(direct.begin(), direct.end());
  std::vector<std::string> frontier = direct;
  for (int level = 0; level < depth && !frontier.empty(); ++level) {
    std::vector<std::string> next;
    for (const auto& f : frontier)
      for (const auto& inner : callees_of(f, defs)) {
        if (names.count(inner)) return inner;
        if (seen.insert(inner).second) next.push_back(inner);
      }
    frontier = std::move(next);
  }
  return std::nullopt;
}

bool is_operator_pattern(const std::string& name) {
  return name == "add" || name == "multiple" || name == "bit-shifting";
}

}  // namespace

std::optional<std::string> detect_sensitive_calls(const Node& stmt, const SensitiveFunctionTable& table,
                                                  const cfront::DefinitionSet& repo_defs,
                                                  const std::optional<std::string>& cwe_hint,
                                                  const WeightConfig& cfg) {
  const auto direct = called_functions(stmt);
  auto search_rows = [&](const std::vector<const std::vector<std::string>*>& rows,
                         bool with_operators) -> std::optional<std::string> {
    std::set<std::string> names, patterns;
    for (const auto* row : rows)
      for (const auto& n : *row) (is_operator_pattern(n) ? patterns : names).insert(n);
    if (auto hit = find_call(direct, names, repo_defs, cfg.wrapper_depth)) return hit;
    if (with_operators && !patterns.empty()) return find_operator(stmt, patterns);
    return std::nullopt;
  };

  std::vector<const std::vector<std::string>*> all_rows;
  for (const auto& [type, names] : table.entries) all_rows.push_back(&names);

  const std::vector<std::string>* hinted = nullptr;
  if (cwe_hint) {
    auto it = table.entries.find(*cwe_hint);
    if (it != table.entries.end()) hinted = &it->second;
  }
  // Operator patterns only count when the hint says integer overflow.
  const bool int_overflow = cwe_hint && *cwe_hint == kIntegerOverflow;

  if (cfg.gating == GatingMode::Ungated || !cwe_hint) return search_rows(all_rows, false);
  if (hinted)
    if (auto hit = search_rows({hinted}, int_overflow)) return hit;
  if (cfg.gating == GatingMode::GatedStrict) return std::nullopt;
  return search_rows(all_rows, false);
}

std::vector<WeightedStatement> assign_weights(const std::vector<StatementText>& statements,
                                              const SensitiveFunctionTable& table,
                                              const cfront::DefinitionSet& repo_defs,
                                              const std::optional<std::string>& cwe_hint, const WeightConfig& cfg) {
  std::vector<WeightedStatement> out;
  for (const auto& s : statements) {
    WeightedStatement w;
    w.line = s.line;
    w.text = s.text;
    w.weight = cfg.weight_d;
    Node block = cfront::parse_statements(s.text);
    if (auto hit = detect_sensitive_calls(block, table, repo_defs, cwe_hint, cfg)) {
      w.sensitive_callee = *hit;
      w.weight = cfg.weight_v;
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace vtrace
