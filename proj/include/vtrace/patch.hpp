#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vtrace/types.hpp"

namespace vtrace {

class Repository;

enum class ChangeKind { Added, Deleted, Context };

std::string_view to_string(ChangeKind kind);

struct LineChange {
  ChangeKind kind = ChangeKind::Context;
  std::optional<int> old_number;
  std::optional<int> new_number;
  std::string text;

  bool operator==(const LineChange&) const = default;
};

struct Hunk {
  std::string file_path;  // post-image path ("/dev/null" side resolved to the other)
  std::string old_path;   // pre-image path; empty for new files
  std::string header;     // the full "@@ -a,b +c,d @@ section" line
  int old_start = 0;
  int old_count = 0;
  int new_start = 0;
  int new_count = 0;
  std::vector<LineChange> changes;

  bool operator==(const Hunk&) const = default;
};

enum class PatchShape { InsertionOnly, DeletionOnly, Mixed };

std::string_view to_string(PatchShape shape);

struct PatchCommit {
  CommitId commit;  // id is empty for a bare diff
  std::vector<Hunk> hunks;
  PatchShape shape = PatchShape::Mixed;
};

struct PatchedFunction {
  std::string function_name;
  std::string file_path;
  FunctionSnapshot pre_body;   // empty `lines` when the function is new
  FunctionSnapshot post_body;  // empty `lines` when the function was removed
  std::set<int> added;         // post-image file line numbers
  std::set<int> deleted;       // pre-image file line numbers
  std::set<std::string> patch_variables;
};

// A changed line that could not be attributed to a function.
struct SkippedLine {
  std::string file_path;
  ChangeKind kind = ChangeKind::Added;
  int line_number = 0;
  std::string text;
  std::string reason;
};

struct PatchExtraction {
  std::vector<PatchedFunction> functions;
  std::vector<SkippedLine> skipped;
};

// Throws MalformedDiff with the byte offset of the first violation.
std::vector<Hunk> parse_unified_diff(std::string_view diff_text);

// Renders hunks back to git-style diff text; parse_unified_diff of the
// result yields the same hunks.
std::string render_unified_diff(const std::vector<Hunk>& hunks);

// Throws EmptyPatch when there are no changed lines at all.
PatchShape classify_patch(const PatchCommit& patch);

PatchCommit make_patch(CommitId commit, std::vector<Hunk> hunks);

// Diff of `commit` against its first parent, parsed and classified.
PatchCommit load_patch(const Repository& repo, const std::string& commit);

// Identifiers in changed lines, minus C keywords.
std::set<std::string> patch_variables(const std::vector<std::string>& changed_lines);

bool is_c_source_path(std::string_view path);

// Pre/post file contents by path; nullopt when the file does not exist.
using FileSource = std::function<std::optional<std::string>(const std::string& path)>;

PatchExtraction extract_patched_functions(const std::vector<Hunk>& hunks, const FileSource& pre_files,
                                          const FileSource& post_files, const std::string& pre_commit = {},
                                          const std::string& post_commit = {});

// Pre-image at the first parent of patch.commit, post-image at patch.commit.
PatchExtraction extract_patched_functions(const Repository& repo, const PatchCommit& patch);

// Applies the hunks of one file to its pre-image text. Returns nullopt when
// context or deleted lines do not match.
std::optional<std::string> apply_hunks(const std::string& pre_text, const std::vector<Hunk>& file_hunks);

// Reverse of apply_hunks: recovers the pre-image from the post-image.
std::optional<std::string> unapply_hunks(const std::string& post_text, const std::vector<Hunk>& file_hunks);

}  // namespace vtrace
