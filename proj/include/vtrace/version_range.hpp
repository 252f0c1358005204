#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vtrace/repo.hpp"

namespace vtrace {

struct VersionVerdict {
  std::string cve_id;
  CommitId vic;
  std::optional<CommitId> pc;  // absent when analyzing an uncommitted diff
  std::vector<TagRef> tags_from_vic;  // tags containing vic
  std::vector<TagRef> tags_from_pc;   // tags containing pc
  std::vector<TagRef> vulnerable;     // from_vic minus from_pc
  std::vector<std::string> warnings;
};

// Natural order of tag names ("v2_9" before "v2_10").
void sort_tags(std::vector<TagRef>& tags);

// Vulnerable tags are those containing vic but not pc.
// Throws UnknownCommit for unresolvable ids.
VersionVerdict delineate(const Repository& repo, const std::string& vic, const std::optional<std::string>& pc,
                         const std::string& cve_id = {});

// Half-open ranges "[first, next)" over the repository's ordered tag list;
// "[first, last]" when a run reaches the newest tag.
std::vector<std::string> vulnerable_ranges(const VersionVerdict& verdict, const std::vector<TagRef>& all_tags);

}  // namespace vtrace
