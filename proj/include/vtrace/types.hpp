#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vtrace {

// A commit in the repository graph.
struct CommitId {
  std::string id;  // 40 hex characters
  std::int64_t timestamp = 0;
  std::vector<std::string> parents;

  bool operator==(const CommitId& other) const { return id == other.id; }
  bool is_root() const { return parents.empty(); }
};

struct TagRef {
  std::string name;
  std::string target;  // peeled commit id

  bool operator==(const TagRef&) const = default;
};

enum class SnapshotRole { Vulnerable, Refactored, Patched, Unknown };

std::string_view to_string(SnapshotRole role);

// The text of one function at one commit. `first_line` is the file line
// number of `lines[0]`.
struct FunctionSnapshot {
  std::string commit;
  std::string file_path;
  std::string function_name;
  int first_line = 1;
  std::vector<std::string> lines;
  SnapshotRole role = SnapshotRole::Unknown;

  int last_line() const { return first_line + static_cast<int>(lines.size()) - 1; }
  bool contains_line(int line) const { return line >= first_line && line <= last_line(); }
  const std::string& line(int number) const { return lines.at(static_cast<std::size_t>(number - first_line)); }
  std::string text() const;

  // Body equality ignores position in the file.
  bool same_body(const FunctionSnapshot& other) const { return lines == other.lines; }
};

struct BlameEntry {
  int line_number = 0;
  std::string origin_commit;
  int origin_line = 0;
  std::string origin_path;
};

}  // namespace vtrace
