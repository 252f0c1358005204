#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtrace/cfront.hpp"

namespace vtrace {

// Vulnerability type -> sensitive function names. Integer-overflow rows may
// hold the operator patterns "add", "multiple" and "bit-shifting".
class SensitiveFunctionTable {
 public:
  std::map<std::string, std::vector<std::string>> entries;

  // The built-in table.
  static SensitiveFunctionTable defaults();

  // JSON object {type: [names...]}. Throws ConfigError on bad shape or
  // duplicate names within one type.
  static SensitiveFunctionTable from_json(std::string_view json_text);

  // Adds or extends rows from another table (names deduplicated).
  void merge(const SensitiveFunctionTable& other);
};

inline constexpr std::string_view kIntegerOverflow = "integer_overflow";

// CWE id ("CWE-190" or "190") -> table row name; nullopt when unmapped.
std::optional<std::string> vulnerability_type_for_cwe(std::string_view cwe_id);

enum class GatingMode { GatedWithFallback, GatedStrict, Ungated };

std::string_view to_string(GatingMode mode);
GatingMode gating_mode_from_string(std::string_view s);  // throws ConfigError

struct WeightConfig {
  double weight_d = 1.0;
  double weight_v = 2.0;
  GatingMode gating = GatingMode::GatedWithFallback;
  int wrapper_depth = 1;
};

// Returns the sensitive function the statement reaches, either by calling it
// or by calling a function in `repo_defs` whose body does (up to
// `wrapper_depth` levels). `cwe_hint` names a table row.
std::optional<std::string> detect_sensitive_calls(const cfront::Node& stmt, const SensitiveFunctionTable& table,
                                                  const cfront::DefinitionSet& repo_defs,
                                                  const std::optional<std::string>& cwe_hint,
                                                  const WeightConfig& cfg = {});

struct WeightedStatement {
  int line = 0;
  std::string text;
  double weight = 1.0;
  std::optional<std::string> sensitive_callee;
};

struct StatementText {
  int line = 0;
  std::string text;
};

std::vector<WeightedStatement> assign_weights(const std::vector<StatementText>& statements,
                                              const SensitiveFunctionTable& table,
                                              const cfront::DefinitionSet& repo_defs,
                                              const std::optional<std::string>& cwe_hint,
                                              const WeightConfig& cfg = {});

// Names called anywhere in a statement, in source order, without duplicates.
std::vector<std::string> called_functions(const cfront::Node& stmt);

}  // namespace vtrace
