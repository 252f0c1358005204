#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vtrace/types.hpp"

namespace vtrace {

struct RepoOptions {
  // for-each-ref pattern below refs/tags/ selecting version tags.
  std::string tag_pattern = "*";
  bool follow_renames = true;
  int rename_similarity = 60;  // percent
  // Follow only first parents through merges; otherwise take a parent in
  // which the file is unchanged, falling back to the first parent.
  bool first_parent_only = true;
};

struct PreviousModification {
  CommitId commit;
  FunctionSnapshot pre;   // function body at the commit's parent
  FunctionSnapshot post;  // function body at the commit
};

// Read-only handle on a git repository. Copies share one underlying
// connection; all member functions are safe to call concurrently.
class Repository {
 public:
  static Repository open(const std::string& path, RepoOptions options = {});

  const std::string& root() const;
  const CommitId& head() const;
  const RepoOptions& options() const;

  // Resolves any revision expression to a commit. Throws UnknownCommit.
  CommitId resolve(const std::string& rev) const;
  bool is_ancestor(const std::string& ancestor, const std::string& descendant) const;

  std::vector<TagRef> tags() const;
  std::vector<TagRef> tags_containing(const std::string& commit) const;

  // File contents at a commit; nullopt when the path does not exist there.
  std::optional<std::string> file_at(const std::string& commit, const std::string& path) const;
  std::vector<std::string> list_files(const std::string& commit) const;

  // Paths (at `commit`) of C/C++ sources mentioning `word` as a whole word.
  std::vector<std::string> grep_files(const std::string& commit, const std::string& word) const;

  // Unified diff of `commit` against its first parent (or the empty tree).
  std::string commit_diff(const std::string& commit) const;

  std::vector<BlameEntry> blame_lines(const std::string& commit, const std::string& path,
                                      const std::set<int>& lines) const;

  // Locates `function_name` in `path` at `commit`. nullopt when either the
  // file or the function is missing.
  std::optional<FunctionSnapshot> function_at(const std::string& commit, const std::string& path,
                                              const std::string& function_name) const;

  // Nearest strict ancestor of `commit` that changed the named function.
  // Throws FunctionAbsent when the function is not found at `commit`.
  std::optional<PreviousModification> previous_modification(const std::string& commit, const std::string& path,
                                                            const std::string& function_name) const;

  // Like previous_modification but `commit` itself counts: the nearest
  // commit at or before `commit` that changed the function.
  std::optional<PreviousModification> last_modification(const std::string& commit, const std::string& path,
                                                        const std::string& function_name) const;

 private:
  struct Impl;
  explicit Repository(std::shared_ptr<Impl> impl);
  std::shared_ptr<Impl> impl_;
};

}  // namespace vtrace
