#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vtrace/backtrace.hpp"
#include "vtrace/config.hpp"
#include "vtrace/llm.hpp"
#include "vtrace/patch.hpp"
#include "vtrace/repo.hpp"
#include "vtrace/slicer.hpp"
#include "vtrace/version_range.hpp"

namespace vtrace {

struct FunctionReport {
  std::string function_name;
  std::string file_path;
  std::optional<DangerousFlow> flow;
  std::optional<RefineResult> refined;
  std::vector<WeightedStatement> weighted;  // `line` is the pre-image file line
  std::vector<int> weighted_rows;           // flow row of each weighted statement
  std::optional<HistoryTrace> trace;
  std::vector<std::string> failures;
};

struct PhaseTimings {
  double extraction_ms = 0;
  double detection_ms = 0;
  double delineation_ms = 0;
  double total_ms = 0;
};

struct AnalysisReport {
  RunConfig config;
  std::string patch_commit;  // HEAD when analyzing a diff
  bool diff_mode = false;
  std::optional<PatchShape> shape;
  std::vector<SkippedLine> skipped;
  std::vector<FunctionReport> functions;
  std::optional<CommitId> vic;
  std::optional<VersionVerdict> verdict;
  std::vector<std::string> ranges;
  std::vector<std::string> degraded;  // phase markers for partial results
  std::vector<std::string> errors;
  PhaseTimings timings;

  // 0 success, 2 degraded, 1 error.
  int exit_code() const;
};

// Builds the configured backend, wrapped in the disk cache when cache_dir is set.
std::shared_ptr<ModelBackend> make_backend(const RunConfig& cfg);

// The patch and its per-function split (P1 input).
struct LoadedPatch {
  PatchCommit patch;
  PatchExtraction extraction;
  bool diff_mode = false;
};

LoadedPatch load_patch_source(const Repository& repo, const RunConfig& cfg);

// Runs extraction, change detection and delineation. Never throws for
// analysis failures; they land in `errors`/`degraded`. Configuration
// problems throw ConfigError before any work.
AnalysisReport run_pipeline(const RunConfig& cfg, std::shared_ptr<ModelBackend> backend = nullptr);

}  // namespace vtrace
