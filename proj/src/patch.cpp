#include "vtrace/patch.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

#include "vtrace/errors.hpp"
#include "vtrace/lexer.hpp"
#include "vtrace/parser.hpp"
#include "vtrace/repo.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

std::string_view to_string(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::Added: return "added";
    case ChangeKind::Deleted: return "deleted";
    case ChangeKind::Context: return "context";
  }
  return "context";
}

std::string_view to_string(PatchShape shape) {
  switch (shape) {
    case PatchShape::InsertionOnly: return "insertion_only";
    case PatchShape::DeletionOnly: return "deletion_only";
    case PatchShape::Mixed: return "mixed";
  }
  return "mixed";
}

namespace {

// Undoes git's C-style quoting of unusual path names.
std::string unquote_path(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    char c = s[i];
    if (c != '\\' || i + 2 >= s.size()) {
      out += c;
      continue;
    }
    char e = s[++i];
    switch (e) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      default:
        if (e >= '0' && e <= '7' && i + 2 < s.size()) {
          out += static_cast<char>(((e - '0') << 6) | ((s[i + 1] - '0') << 3) | (s[i + 2] - '0'));
          i += 2;
        } else {
          out += e;
        }
    }
  }
  return out;
}

std::string strip_prefix(std::string_view raw) {
  // "--- a/path\ttimestamp" from non-git tools carries a tab suffix.
  auto tab = raw.find('\t');
  if (tab != std::string_view::npos && raw.front() != '"') raw = raw.substr(0, tab);
  std::string p = unquote_path(trim(raw));
  if (p == "/dev/null") return p;
  if (p.size() > 2 && (p[0] == 'a' || p[0] == 'b') && p[1] == '/') p.erase(0, 2);
  return p;
}

bool parse_int(std::string_view s, int& out) {
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

// "-a,b" or "-a" style range.
bool parse_range(std::string_view s, int& start, int& count) {
  auto comma = s.find(',');
  if (comma == std::string_view::npos) {
    count = 1;
    return parse_int(s, start);
  }
  return parse_int(s.substr(0, comma), start) && parse_int(s.substr(comma + 1), count);
}

bool parse_hunk_header(std::string_view line, Hunk& h) {
  // @@ -a,b +c,d @@ section
  if (!starts_with(line, "@@ -")) return false;
  auto end = line.find(" @@", 3);
  if (end == std::string_view::npos) return false;
  auto ranges = line.substr(3, end - 3);
  auto space = ranges.find(' ');
  if (space == std::string_view::npos) return false;
  auto old_r = ranges.substr(0, space);
  auto new_r = ranges.substr(space + 1);
  if (old_r.empty() || new_r.empty() || old_r[0] != '-' || new_r[0] != '+') return false;
  return parse_range(old_r.substr(1), h.old_start, h.old_count) && parse_range(new_r.substr(1), h.new_start, h.new_count);
}

}  // namespace

std::vector<Hunk> parse_unified_diff(std::string_view text) {
  std::vector<Hunk> hunks;
  std::string old_path, new_path;
  bool have_file = false;
  bool saw_any_header = false;
  std::optional<Hunk> cur;
  int old_left = 0, new_left = 0, old_no = 0, new_no = 0;

  auto finish = [&](std::size_t offset) {
    if (!cur) return;
    if (old_left != 0 || new_left != 0) throw MalformedDiff(offset, "hunk '" + cur->header + "' ends early");
    hunks.push_back(std::move(*cur));
    cur.reset();
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::size_t next = nl == std::string_view::npos ? text.size() : nl + 1;
    std::string_view line = text.substr(pos, (nl == std::string_view::npos ? text.size() : nl) - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t offset = pos;
    pos = next;

    if (cur && (old_left > 0 || new_left > 0)) {
      char tag = line.empty() ? ' ' : line[0];
      std::string body(line.empty() ? std::string_view() : line.substr(1));
      LineChange ch;
      ch.text = body;
      if (tag == ' ') {
        if (old_left == 0 || new_left == 0) throw MalformedDiff(offset, "context line exceeds hunk counts");
        ch.kind = ChangeKind::Context;
        ch.old_number = old_no++;
        ch.new_number = new_no++;
        --old_left;
        --new_left;
      } else if (tag == '-') {
        if (old_left == 0) throw MalformedDiff(offset, "deleted line exceeds hunk old count");
        ch.kind = ChangeKind::Deleted;
        ch.old_number = old_no++;
        --old_left;
      } else if (tag == '+') {
        if (new_left == 0) throw MalformedDiff(offset, "added line exceeds hunk new count");
        ch.kind = ChangeKind::Added;
        ch.new_number = new_no++;
        --new_left;
      } else if (tag == '\\') {
        continue;  // "\ No newline at end of file"
      } else {
        throw MalformedDiff(offset, "unexpected line inside hunk");
      }
      cur->changes.push_back(std::move(ch));
      continue;
    }
    if (!line.empty() && line[0] == '\\') continue;

    if (starts_with(line, "diff --git ")) {
      finish(offset);
      saw_any_header = true;
      have_file = false;
      // Paths come from the ---/+++ lines; renames and mode changes
      // without content changes produce no hunks.
      old_path.clear();
      new_path.clear();
      continue;
    }
    if (starts_with(line, "--- ")) {
      finish(offset);
      saw_any_header = true;
      old_path = strip_prefix(line.substr(4));
      have_file = false;
      continue;
    }
    if (starts_with(line, "+++ ")) {
      if (old_path.empty()) throw MalformedDiff(offset, "'+++' without preceding '---'");
      new_path = strip_prefix(line.substr(4));
      have_file = true;
      continue;
    }
    if (starts_with(line, "@@")) {
      finish(offset);
      if (!have_file) throw MalformedDiff(offset, "hunk before file header");
      Hunk h;
      if (!parse_hunk_header(line, h)) throw MalformedDiff(offset, "bad hunk header");
      h.header = std::string(line);
      h.old_path = old_path == "/dev/null" ? std::string() : old_path;
      h.file_path = new_path == "/dev/null" ? old_path : new_path;
      old_no = h.old_count == 0 ? h.old_start + 1 : h.old_start;
      new_no = h.new_count == 0 ? h.new_start + 1 : h.new_start;
      old_left = h.old_count;
      new_left = h.new_count;
      cur = std::move(h);
      continue;
    }
    // Anything else (index lines, mode lines, mail headers, commit message)
    // is ignored outside hunks.
    finish(offset);
  }
  finish(text.size());
  if (!saw_any_header && !trim(text).empty()) throw MalformedDiff(0, "no file header found");
  return hunks;
}

std::string render_unified_diff(const std::vector<Hunk>& hunks) {
  std::string out;
  std::string last_old, last_new;
  bool first = true;
  for (const auto& h : hunks) {
    std::string old_side = h.old_path.empty() ? "/dev/null" : "a/" + h.old_path;
    std::string new_side = "b/" + h.file_path;
    bool removed = h.new_count == 0 && std::all_of(h.changes.begin(), h.changes.end(),
                                                   [](const LineChange& c) { return c.kind == ChangeKind::Deleted; });
    if (removed && !h.old_path.empty() && h.new_start == 0) new_side = "/dev/null";
    if (first || old_side != last_old || new_side != last_new) {
      out += "diff --git a/" + (h.old_path.empty() ? h.file_path : h.old_path) + " b/" + h.file_path + "\n";
      out += "--- " + old_side + "\n+++ " + new_side + "\n";
      last_old = old_side;
      last_new = new_side;
      first = false;
    }
    out += h.header + "\n";
    for (const auto& c : h.changes) {
      out += c.kind == ChangeKind::Added ? '+' : c.kind == ChangeKind::Deleted ? '-' : ' ';
      out += c.text;
      out += '\n';
    }
  }
  return out;
}

PatchShape classify_patch(const PatchCommit& patch) {
  std::size_t added = 0, deleted = 0;
  for (const auto& h : patch.hunks)
    for (const auto& c : h.changes) {
      if (c.kind == ChangeKind::Added) ++added;
      if (c.kind == ChangeKind::Deleted) ++deleted;
    }
  if (added == 0 && deleted == 0) throw EmptyPatch("patch has no added or deleted lines");
  if (deleted == 0) return PatchShape::InsertionOnly;
  if (added == 0) return PatchShape::DeletionOnly;
  return PatchShape::Mixed;
}

PatchCommit make_patch(CommitId commit, std::vector<Hunk> hunks) {
  PatchCommit p;
  p.commit = std::move(commit);
  p.hunks = std::move(hunks);
  p.shape = classify_patch(p);
  return p;
}

PatchCommit load_patch(const Repository& repo, const std::string& commit) {
  auto c = repo.resolve(commit);
  return make_patch(c, parse_unified_diff(repo.commit_diff(c.id)));
}

std::set<std::string> patch_variables(const std::vector<std::string>& changed_lines) {
  std::set<std::string> vars;
  for (const auto& line : changed_lines)
    for (const auto& t : cfront::tokenize(line))
      if (t.kind == cfront::TokenKind::Identifier) vars.insert(t.text);
  return vars;
}

bool is_c_source_path(std::string_view path) {
  auto dot = path.rfind('.');
  if (dot == std::string_view::npos) return false;
  std::string ext(path.substr(dot + 1));
  static const char* const kExts[] = {"c", "h", "cc", "cpp", "cxx", "c++", "hpp", "hh", "hxx", "inc", "C", "H"};
  for (auto e : kExts)
    if (ext == e) return true;
  return false;
}

namespace {

struct FileView {
  std::vector<std::string> lines;
  std::vector<cfront::FunctionLocation> functions;
};

std::optional<FileView> view_of(const std::optional<std::string>& text) {
  if (!text) return std::nullopt;
  FileView v;
  v.lines = split_lines(*text);
  v.functions = cfront::locate_functions(*text);
  return v;
}

const cfront::FunctionLocation* enclosing(const std::optional<FileView>& v, int line) {
  if (!v) return nullptr;
  for (const auto& f : v->functions)
    if (f.begin_line <= line && line <= f.end_line) return &f;
  return nullptr;
}

FunctionSnapshot snapshot_of(const std::optional<FileView>& v, const std::string& name, const std::string& path,
                             const std::string& commit, SnapshotRole role) {
  FunctionSnapshot s;
  s.commit = commit;
  s.file_path = path;
  s.function_name = name;
  s.role = role;
  if (!v) return s;
  for (const auto& f : v->functions) {
    if (f.name != name) continue;
    s.first_line = f.begin_line;
    for (int l = f.begin_line; l <= f.end_line && l <= static_cast<int>(v->lines.size()); ++l)
      s.lines.push_back(v->lines[static_cast<std::size_t>(l - 1)]);
    break;
  }
  return s;
}

}  // namespace

PatchExtraction extract_patched_functions(const std::vector<Hunk>& hunks, const FileSource& pre_files,
                                          const FileSource& post_files, const std::string& pre_commit,
                                          const std::string& post_commit) {
  PatchExtraction out;
  // Files in first-appearance order.
  std::vector<std::pair<std::string, std::string>> files;  // (old_path, new_path)
  std::map<std::string, std::vector<const Hunk*>> by_file;
  for (const auto& h : hunks) {
    if (!by_file.count(h.file_path)) files.emplace_back(h.old_path, h.file_path);
    by_file[h.file_path].push_back(&h);
  }

  for (const auto& [old_path, new_path] : files) {
    const auto& file_hunks = by_file[new_path];
    if (!is_c_source_path(new_path)) {
      for (const auto* h : file_hunks)
        for (const auto& c : h->changes) {
          if (c.kind == ChangeKind::Context) continue;
          int n = c.kind == ChangeKind::Added ? *c.new_number : *c.old_number;
          out.skipped.push_back({new_path, c.kind, n, c.text, "not a C/C++ source file"});
        }
      continue;
    }
    auto pre = view_of(old_path.empty() ? std::nullopt : pre_files(old_path));
    auto post = view_of(post_files(new_path));

    std::vector<std::string> order;
    std::map<std::string, PatchedFunction> records;
    std::map<std::string, std::vector<std::string>> changed_text;
    auto record_for = [&](const std::string& name) -> PatchedFunction& {
      auto it = records.find(name);
      if (it != records.end()) return it->second;
      order.push_back(name);
      PatchedFunction pf;
      pf.function_name = name;
      pf.file_path = new_path;
      pf.pre_body = snapshot_of(pre, name, old_path.empty() ? new_path : old_path, pre_commit, SnapshotRole::Vulnerable);
      pf.post_body = snapshot_of(post, name, new_path, post_commit, SnapshotRole::Patched);
      return records.emplace(name, std::move(pf)).first->second;
    };

    for (const auto* h : file_hunks) {
      for (const auto& c : h->changes) {
        if (c.kind == ChangeKind::Context) continue;
        const bool added = c.kind == ChangeKind::Added;
        int n = added ? *c.new_number : *c.old_number;
        const auto* loc = enclosing(added ? post : pre, n);
        if (!loc) {
          std::string reason = (added ? post : pre) ? "outside any function" : "file not available";
          out.skipped.push_back({new_path, c.kind, n, c.text, reason});
          continue;
        }
        auto& rec = record_for(loc->name);
        (added ? rec.added : rec.deleted).insert(n);
        changed_text[loc->name].push_back(c.text);
      }
    }
    for (const auto& name : order) {
      auto& rec = records[name];
      rec.patch_variables = patch_variables(changed_text[name]);
      out.functions.push_back(std::move(rec));
    }
  }
  return out;
}

PatchExtraction extract_patched_functions(const Repository& repo, const PatchCommit& patch) {
  auto c = repo.resolve(patch.commit.id);
  std::string parent = c.parents.empty() ? std::string() : c.parents.front();
  FileSource pre = [&](const std::string& path) -> std::optional<std::string> {
    if (parent.empty()) return std::nullopt;
    return repo.file_at(parent, path);
  };
  FileSource post = [&](const std::string& path) { return repo.file_at(c.id, path); };
  return extract_patched_functions(patch.hunks, pre, post, parent, c.id);
}

namespace {

std::optional<std::string> rewrite(const std::string& text, const std::vector<Hunk>& hunks, bool forward) {
  auto lines = split_lines(text);
  std::vector<std::string> out;
  std::size_t next = 0;  // index into `lines`
  for (const auto& h : hunks) {
    int start = forward ? h.old_start : h.new_start;
    int count = forward ? h.old_count : h.new_count;
    std::size_t begin = static_cast<std::size_t>(count == 0 ? start : start - 1);
    if (begin < next || begin > lines.size()) return std::nullopt;
    out.insert(out.end(), lines.begin() + static_cast<long>(next), lines.begin() + static_cast<long>(begin));
    next = begin;
    for (const auto& c : h.changes) {
      const bool source_side = c.kind == ChangeKind::Context || (forward ? c.kind == ChangeKind::Deleted : c.kind == ChangeKind::Added);
      const bool target_side = c.kind == ChangeKind::Context || (forward ? c.kind == ChangeKind::Added : c.kind == ChangeKind::Deleted);
      if (source_side) {
        if (next >= lines.size() || lines[next] != c.text) return std::nullopt;
        ++next;
      }
      if (target_side) out.push_back(c.text);
    }
  }
  out.insert(out.end(), lines.begin() + static_cast<long>(next), lines.end());
  return join_lines(out);
}

}  // namespace

std::optional<std::string> apply_hunks(const std::string& pre_text, const std::vector<Hunk>& file_hunks) {
  return rewrite(pre_text, file_hunks, true);
}

std::optional<std::string> unapply_hunks(const std::string& post_text, const std::vector<Hunk>& file_hunks) {
  return rewrite(post_text, file_hunks, false);
}

}  // namespace vtrace
