#include "vtrace/version_range.hpp"

#include <algorithm>
#include <set>

#include "vtrace/text_util.hpp"

namespace vtrace {

void sort_tags(std::vector<TagRef>& tags) {
  std::sort(tags.begin(), tags.end(), [](const TagRef& a, const TagRef& b) {
    if (natural_less(a.name, b.name)) return true;
    if (natural_less(b.name, a.name)) return false;
    return a.name < b.name;
  });
}

VersionVerdict delineate(const Repository& repo, const std::string& vic, const std::optional<std::string>& pc,
                         const std::string& cve_id) {
  VersionVerdict v;
  v.cve_id = cve_id;
  v.vic = repo.resolve(vic);
  v.tags_from_vic = repo.tags_containing(v.vic.id);
  if (pc) {
    v.pc = repo.resolve(*pc);
    v.tags_from_pc = repo.tags_containing(v.pc->id);
    if (!repo.is_ancestor(v.vic.id, v.pc->id))
      v.warnings.push_back("vic " + v.vic.id + " is not an ancestor of the patch commit " + v.pc->id +
                           "; the fix may live on another branch");
  }
  std::set<std::string> fixed;
  for (const auto& t : v.tags_from_pc) fixed.insert(t.name);
  for (const auto& t : v.tags_from_vic)
    if (!fixed.count(t.name)) v.vulnerable.push_back(t);
  sort_tags(v.tags_from_vic);
  sort_tags(v.tags_from_pc);
  sort_tags(v.vulnerable);
  return v;
}

std::vector<std::string> vulnerable_ranges(const VersionVerdict& verdict, const std::vector<TagRef>& all_tags) {
  std::vector<TagRef> ordered = all_tags;
  sort_tags(ordered);
  std::set<std::string> bad;
  for (const auto& t : verdict.vulnerable) bad.insert(t.name);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ordered.size();) {
    if (!bad.count(ordered[i].name)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < ordered.size() && bad.count(ordered[j + 1].name)) ++j;
    if (j + 1 < ordered.size())
      out.push_back("[" + ordered[i].name + ", " + ordered[j + 1].name + ")");
    else
      out.push_back("[" + ordered[i].name + ", " + ordered[j].name + "]");
    i = j + 1;
  }
  return out;
}

}  // namespace vtrace
