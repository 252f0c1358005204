#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vtrace/llm.hpp"
#include "vtrace/similarity.hpp"
#include "vtrace/slicer.hpp"
#include "vtrace/weighting.hpp"

namespace vtrace {

enum class OutputFormat { Json, Markdown };
enum class BackendKind { Stub, Chat, CacheOnly };

std::string_view to_string(OutputFormat f);
std::string_view to_string(BackendKind k);
std::string_view to_string(SliceDirection d);

struct RunConfig {
  std::string repo_path = ".";
  std::string commit;     // patch commit
  std::string diff_path;  // or an uncommitted diff against HEAD
  CveContext cve;
  PromptStrategy strategy = PromptStrategy::FewShotCot;
  Thresholds thresholds;
  WeightConfig weights;
  SliceDirection direction = SliceDirection::Both;
  BackendKind backend = BackendKind::Stub;
  std::string stub_answers;  // JSON file: CVE id -> canned response
  BackendSettings backend_settings;
  std::string cache_dir;  // empty disables the response cache
  OutputFormat format = OutputFormat::Json;
  int step_limit = 200;
  std::string trace_log;
  int inline_depth = 1;
  std::string tag_pattern = "*";
  bool first_parent_only = true;
  std::string sensitive_table;  // extra rows merged over the built-in table
  std::string exemplars_path;

  // Every problem found, in key order; empty when valid.
  std::vector<std::string> problems() const;
  // Throws ConfigError listing all problems.
  void validate() const;
};

// Known keys of the key = value configuration format.
const std::vector<std::string>& config_keys();

// Throws ConfigError for unknown keys or malformed values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

// Lines of "key = value"; '#' starts a comment. Throws ConfigError with the
// line number on errors.
void apply_config_text(RunConfig& cfg, std::string_view text);
void apply_config_file(RunConfig& cfg, const std::string& path);

// VTRACE_API_KEY, VTRACE_API_BASE, VTRACE_MODEL, VTRACE_BACKEND,
// VTRACE_CACHE_DIR. `getenv` is injectable for tests.
void apply_environment(RunConfig& cfg,
                       const std::function<const char*(const char*)>& getenv_fn = nullptr);

// Current value of every key, as configuration text would spell it. The API
// key is reported only as set/unset.
std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg);

}  // namespace vtrace
