#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtrace/cfront.hpp"
#include "vtrace/patch.hpp"
#include "vtrace/repo.hpp"
#include "vtrace/similarity.hpp"
#include "vtrace/weighting.hpp"

namespace vtrace {

struct StatementRef {
  int line = 0;
  std::string text;
};

// Vulnerable statements compared against the pre-image of one historical modification.
struct CommitComparison {
  CommitId commit;
  std::string file_path;
  std::vector<StatementRef> pre_statements;   // S'
  std::vector<StatementRef> post_statements;  // the statement set being tracked
  std::vector<StatementMatch> per_statement;  // one per tracked statement
  double similarity_score = 0.0;
};

enum class TerminationReason { ScoreBelowThreshold, HistoryExhausted, StepLimit };

std::string_view to_string(TerminationReason r);

struct HistoryTrace {
  std::string function_name;
  std::string file_path;
  std::vector<CommitComparison> steps;  // newest first
  std::optional<CommitId> vic;
  TerminationReason terminated_reason = TerminationReason::HistoryExhausted;
  std::vector<std::string> warnings;
};

// One vulnerable statement at the commit where tracing starts. `line` is a file line
// number in that commit's version of the function.
struct TracedStatement {
  int line = 0;
  std::string text;
  double weight = 1.0;
  bool sensitive = false;
};

struct BacktraceOptions {
  Thresholds thresholds;
  int step_limit = 200;
  cfront::InlineConfig inline_config;
  bool use_definitions = true;  // inline macros and static functions of the file and its headers
  std::function<void(const CommitComparison&)> on_step;
};

// Walks the modifications of `function_name` at or before `start_commit`.
HistoryTrace backtrace_vic(const Repository& repo, const std::string& start_commit, const std::string& path,
                           const std::string& function_name, std::vector<TracedStatement> sv,
                           const BacktraceOptions& options = {});

// Vulnerable statements given in pre-image line numbers of the patched function.
HistoryTrace backtrace_vic(const Repository& repo, const PatchedFunction& fn, const std::vector<WeightedStatement>& sv,
                           const BacktraceOptions& options = {});

// Macros and static functions visible in `path` at `commit`: the file itself
// plus the headers it includes with quotes.
cfront::DefinitionSet definitions_at(const Repository& repo, const std::string& commit, const std::string& path);

// The commit none of the others precedes (ancestry first, then time).
std::optional<CommitId> earliest_commit(const Repository& repo, const std::vector<CommitId>& commits);

}  // namespace vtrace
