#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtrace/cfront.hpp"
#include "vtrace/types.hpp"

namespace vtrace {

struct Thresholds {
  double line = 0.9;   // pre-filter on raw text
  double ast = 0.8;    // normalized syntax sequences
  double score = 0.7;  // weighted score below which a commit introduced the vulnerable statements

  // Throws ConfigError naming every field outside [0, 1].
  void validate() const;
};

std::size_t levenshtein(std::string_view a, std::string_view b);
std::size_t sequence_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

// 1 - distance / max length over whitespace-squeezed text; 1.0 when both
// are empty.
double line_similarity(std::string_view a, std::string_view b);

double sequence_similarity(const cfront::AstSequence& a, const cfront::AstSequence& b);

// Parses a statement fragment, inlines `defs` and normalizes. Throws
// ParseFailure when nothing parseable remains.
cfront::AstSequence statement_sequence(std::string_view text, const cfront::DefinitionSet& defs = {},
                                       const cfront::InlineConfig& cfg = {});
cfront::AstSequence statement_sequence(const cfront::Node& stmt, const cfront::DefinitionSet& defs = {},
                                       const cfront::InlineConfig& cfg = {});

double ast_similarity(std::string_view a, std::string_view b, const cfront::DefinitionSet& defs_a = {},
                      const cfront::DefinitionSet& defs_b = {}, const cfront::InlineConfig& cfg = {});

// One comparable statement of a function. Control statements carry only
// their header in `text`/`header`; `full` keeps the nested body.
struct StatementUnit {
  int line = 0;
  int end_line = 0;
  std::string text;
  cfront::Node header;
  cfront::Node full;
};

std::vector<StatementUnit> statement_units(const FunctionSnapshot& fn);

// Unit whose header covers `line`, falling back to the innermost statement
// containing it.
const StatementUnit* unit_at(const std::vector<StatementUnit>& units, int line);

enum class MatchChannel { Line, Ast, None };

std::string_view to_string(MatchChannel channel);

struct StatementMatch {
  int sv_line = 0;
  std::string sv_text;
  double weight = 1.0;
  bool sensitive = false;  // weighted as weight_v
  bool matched = false;
  MatchChannel channel = MatchChannel::None;
  double score = 0.0;  // best of the two channels
  double line_score = 0.0;
  std::optional<double> ast_score;  // absent when parsing failed
  std::optional<int> matched_line;
  std::string matched_text;
};

// Weighted fraction of matched statements. Throws EmptySet when there are
// no statements or all weights are zero.
double compute_similarity_score(const std::vector<StatementMatch>& matches);

// The same ratio from counts: `sensitive` statements carry weight_v.
double compute_similarity_score(int sensitive_total, int sensitive_matched, int default_total, int default_matched,
                                double weight_v = 2.0, double weight_d = 1.0);

// Per-commit definitions used when comparing statements.
struct ComparisonContext {
  const cfront::DefinitionSet* sv_defs = nullptr;
  const cfront::DefinitionSet* candidate_defs = nullptr;
  cfront::InlineConfig inline_config;
};

// Best match for one vulnerable statement among candidates: the line channel
// decides first, the ast channel is consulted when it fails.
StatementMatch match_statement(const StatementUnit& sv, const std::vector<StatementUnit>& candidates,
                               const Thresholds& th, const ComparisonContext& ctx = {});

}  // namespace vtrace
