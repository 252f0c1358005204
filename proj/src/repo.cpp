#include "vtrace/repo.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "vtrace/errors.hpp"
#include "vtrace/git_process.hpp"
#include "vtrace/parser.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

namespace fs = std::filesystem;

namespace {

bool is_hex_id(std::string_view s) {
  return s.size() == 40 && std::all_of(s.begin(), s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      if (start < s.size()) out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void reject_option_like(const std::string& rev) {
  if (rev.empty() || rev.front() == '-') throw UnknownCommit("invalid revision '" + rev + "'");
}

}  // namespace

struct Repository::Impl {
  std::string root;
  RepoOptions options;
  CommitId head;
  mutable CatFileBatch objects;
  mutable std::mutex cache_mu;
  mutable std::unordered_map<std::string, CommitId> commits;

  Impl(std::string r, RepoOptions o) : root(std::move(r)), options(std::move(o)), objects(root) {}

  ProcessResult git(const std::vector<std::string>& args, bool must_succeed = true) const {
    auto r = run_git(root, args);
    if (must_succeed && r.exit_code != 0) {
      std::string cmd = "git";
      for (const auto& a : args) cmd += " " + a;
      throw GitCommandFailed(cmd + ": " + std::string(trim(r.err)));
    }
    return r;
  }

  // Loads commit metadata for `rev` and a window of its ancestors so that
  // history walks do not spawn one process per commit.
  CommitId commit(const std::string& rev) const {
    if (is_hex_id(rev)) {
      std::lock_guard lock(cache_mu);
      auto it = commits.find(rev);
      if (it != commits.end()) return it->second;
    }
    reject_option_like(rev);
    auto r = git({"rev-list", "--timestamp", "--parents", "--max-count=1024", rev + "^{commit}", "--"}, false);
    if (r.exit_code != 0 || r.out.empty()) throw UnknownCommit("unknown commit '" + rev + "'");
    std::optional<CommitId> first;
    std::lock_guard lock(cache_mu);
    for (const auto& line : split_lines(r.out)) {
      auto fields = split(line, ' ');
      if (fields.size() < 2) continue;
      CommitId c;
      c.timestamp = std::stoll(fields[0]);
      c.id = fields[1];
      c.parents.assign(fields.begin() + 2, fields.end());
      if (!first) first = c;
      commits.emplace(c.id, c);
    }
    if (!first) throw UnknownCommit("unknown commit '" + rev + "'");
    return *first;
  }

  std::optional<CatFileBatch::Object> blob(const std::string& commit_id, const std::string& path) const {
    auto obj = objects.read(commit_id + ":" + path);
    if (!obj || obj->type != "blob") return std::nullopt;
    return obj;
  }

  // Source path of `path` in `parent`, following a rename when the file does
  // not exist there under the same name.
  std::optional<std::string> path_in_parent(const std::string& parent, const std::string& child,
                                            const std::string& path) const {
    if (objects.read(parent + ":" + path)) return path;
    if (!options.follow_renames) return std::nullopt;
    auto r = git({"diff", "--no-color", "--no-ext-diff", "-M" + std::to_string(options.rename_similarity) + "%",
                  "--name-status", "-z", parent, child},
                 false);
    auto fields = split(r.out, '\0');
    for (std::size_t i = 0; i < fields.size();) {
      const auto& status = fields[i];
      if (!status.empty() && (status[0] == 'R' || status[0] == 'C') && i + 2 < fields.size()) {
        if (fields[i + 2] == path) return fields[i + 1];
        i += 3;
      } else {
        i += 2;
      }
    }
    return std::nullopt;
  }

  std::string choose_parent(const CommitId& c, const std::string& path) const {
    if (options.first_parent_only || c.parents.size() < 2) return c.parents.front();
    auto own = objects.read(c.id + ":" + path);
    for (const auto& p : c.parents) {
      auto theirs = objects.read(p + ":" + path);
      if (own && theirs && own->id == theirs->id) return p;
    }
    return c.parents.front();
  }

  std::vector<TagRef> list_tags(const std::vector<std::string>& extra) const {
    std::vector<std::string> args{"for-each-ref",
                                  "--format=%(refname)%00%(objectname)%00%(objecttype)%00%(*objectname)%00%(*objecttype)"};
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back(options.tag_pattern == "*" ? "refs/tags" : "refs/tags/" + options.tag_pattern);
    auto r = git(args);
    std::vector<TagRef> tags;
    for (const auto& line : split_lines(r.out)) {
      auto f = split(line, '\0');
      f.resize(5);
      std::string name = f[0].substr(std::min<std::size_t>(f[0].size(), 10));  // strip "refs/tags/"
      if (!f[3].empty()) {
        if (f[4] == "commit") tags.push_back({name, f[3]});
      } else if (f[2] == "commit") {
        tags.push_back({name, f[1]});
      }
    }
    std::sort(tags.begin(), tags.end(), [](const TagRef& a, const TagRef& b) { return natural_less(a.name, b.name); });
    return tags;
  }
};

Repository::Repository(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

Repository Repository::open(const std::string& path, RepoOptions options) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("path does not exist: " + path);
  if (!fs::is_directory(path, ec)) throw IoError("not a directory: " + path);
  if (::access(path.c_str(), R_OK | X_OK) != 0) throw IoError("unreadable directory: " + path);
  std::string root = fs::canonical(path, ec).string();
  if (ec) throw IoError("cannot resolve " + path + ": " + ec.message());

  // The ceiling stops git from discovering an enclosing repository, so a
  // plain directory inside some checkout is still rejected.
  std::string ceiling = fs::path(root).parent_path().string();
  auto r = run_git(root, {"rev-parse", "--absolute-git-dir"}, {}, {"GIT_CEILING_DIRECTORIES=" + ceiling});
  if (r.exit_code != 0) throw NotARepository("no git object store at " + path);
  auto top = run_git(root, {"rev-parse", "--show-toplevel"});
  if (top.exit_code == 0 && !trim(top.out).empty()) root = std::string(trim(top.out));

  auto impl = std::make_shared<Impl>(root, std::move(options));
  auto head = run_git(root, {"rev-parse", "--verify", "--quiet", "HEAD^{commit}"});
  if (head.exit_code == 0) impl->head = impl->commit(std::string(trim(head.out)));
  return Repository(std::move(impl));
}

const std::string& Repository::root() const { return impl_->root; }
const CommitId& Repository::head() const { return impl_->head; }
const RepoOptions& Repository::options() const { return impl_->options; }

CommitId Repository::resolve(const std::string& rev) const { return impl_->commit(rev); }

bool Repository::is_ancestor(const std::string& ancestor, const std::string& descendant) const {
  auto a = resolve(ancestor);
  auto d = resolve(descendant);
  if (a.id == d.id) return true;
  auto r = impl_->git({"merge-base", "--is-ancestor", a.id, d.id}, false);
  if (r.exit_code > 1) throw GitCommandFailed("git merge-base: " + std::string(trim(r.err)));
  return r.exit_code == 0;
}

std::vector<TagRef> Repository::tags() const { return impl_->list_tags({}); }

std::vector<TagRef> Repository::tags_containing(const std::string& commit) const {
  auto c = resolve(commit);
  return impl_->list_tags({"--contains", c.id});
}

std::optional<std::string> Repository::file_at(const std::string& commit, const std::string& path) const {
  auto c = resolve(commit);
  auto obj = impl_->blob(c.id, path);
  if (!obj) return std::nullopt;
  return std::move(obj->content);
}

std::vector<std::string> Repository::list_files(const std::string& commit) const {
  auto c = resolve(commit);
  auto r = impl_->git({"ls-tree", "-r", "--name-only", "-z", c.id});
  return split(r.out, '\0');
}

std::vector<std::string> Repository::grep_files(const std::string& commit, const std::string& word) const {
  auto c = resolve(commit);
  auto r = impl_->git({"grep", "-l", "-w", "-F", "-e", word, c.id, "--", "*.c", "*.h", "*.cc", "*.cpp", "*.cxx",
                       "*.hpp", "*.hh"},
                      false);
  if (r.exit_code > 1) throw GitCommandFailed("git grep: " + std::string(trim(r.err)));
  std::vector<std::string> files;
  const std::string prefix = c.id + ":";
  for (auto& line : split_lines(r.out)) {
    if (starts_with(line, prefix)) line.erase(0, prefix.size());
    if (!line.empty()) files.push_back(line);
  }
  return files;
}

std::string Repository::commit_diff(const std::string& commit) const {
  auto c = resolve(commit);
  std::vector<std::string> common{"--no-color", "--no-ext-diff", "--no-textconv", "-M", "--src-prefix=a/",
                                  "--dst-prefix=b/"};
  std::vector<std::string> args;
  if (c.parents.empty()) {
    args = {"diff-tree", "-p", "--root"};
    args.insert(args.end(), common.begin(), common.end());
    args.push_back(c.id);
    auto out = impl_->git(args).out;
    // diff-tree prints the commit id first.
    auto nl = out.find('\n');
    if (nl != std::string::npos && is_hex_id(std::string_view(out).substr(0, nl))) out.erase(0, nl + 1);
    return out;
  }
  args = {"diff"};
  args.insert(args.end(), common.begin(), common.end());
  args.push_back(c.parents.front());
  args.push_back(c.id);
  return impl_->git(args).out;
}

std::vector<BlameEntry> Repository::blame_lines(const std::string& commit, const std::string& path,
                                                const std::set<int>& lines) const {
  auto c = resolve(commit);
  auto content = impl_->blob(c.id, path);
  if (!content) throw FileAbsent(path + " does not exist at " + c.id);
  if (lines.empty()) return {};
  const int total = static_cast<int>(split_lines(content->content).size());
  for (int l : lines)
    if (l < 1 || l > total)
      throw LineOutOfRange("line " + std::to_string(l) + " outside 1.." + std::to_string(total) + " of " + path);

  std::vector<std::string> args{"blame", "--porcelain"};
  for (auto it = lines.begin(); it != lines.end();) {
    int lo = *it, hi = *it;
    ++it;
    while (it != lines.end() && *it == hi + 1) hi = *it++;
    args.push_back("-L" + std::to_string(lo) + "," + std::to_string(hi));
  }
  args.push_back(c.id);
  args.push_back("--");
  args.push_back(path);
  auto r = impl_->git(args);

  std::map<std::string, std::string> filename_of;
  std::vector<BlameEntry> out;
  BlameEntry current;
  bool open_entry = false;
  for (const auto& line : split_lines(r.out)) {
    if (!line.empty() && line[0] == '\t') {
      if (open_entry) {
        current.origin_path = filename_of.count(current.origin_commit) ? filename_of[current.origin_commit] : path;
        out.push_back(current);
      }
      open_entry = false;
      continue;
    }
    if (line.size() > 41 && is_hex_id(std::string_view(line).substr(0, 40)) && line[40] == ' ') {
      std::istringstream in(line.substr(41));
      current = BlameEntry{};
      current.origin_commit = line.substr(0, 40);
      in >> current.origin_line >> current.line_number;
      open_entry = true;
    } else if (starts_with(line, "filename ") && open_entry) {
      filename_of[current.origin_commit] = line.substr(9);
    }
  }
  std::sort(out.begin(), out.end(), [](const BlameEntry& a, const BlameEntry& b) { return a.line_number < b.line_number; });
  return out;
}

std::optional<FunctionSnapshot> Repository::function_at(const std::string& commit, const std::string& path,
                                                        const std::string& function_name) const {
  auto c = resolve(commit);
  auto obj = impl_->blob(c.id, path);
  if (!obj) return std::nullopt;
  auto lines = split_lines(obj->content);
  for (const auto& loc : cfront::locate_functions(obj->content)) {
    if (loc.name != function_name) continue;
    FunctionSnapshot snap;
    snap.commit = c.id;
    snap.file_path = path;
    snap.function_name = function_name;
    snap.first_line = loc.begin_line;
    for (int l = loc.begin_line; l <= loc.end_line && l <= static_cast<int>(lines.size()); ++l)
      snap.lines.push_back(lines[static_cast<std::size_t>(l - 1)]);
    return snap;
  }
  return std::nullopt;
}

std::optional<PreviousModification> Repository::previous_modification(const std::string& commit,
                                                                      const std::string& path,
                                                                      const std::string& function_name) const {
  auto start = resolve(commit);
  if (!function_at(start.id, path, function_name))
    throw FunctionAbsent(function_name + " not found in " + path + " at " + start.id);
  if (start.is_root()) return std::nullopt;

  std::string parent = impl_->choose_parent(start, path);
  auto parent_path = impl_->path_in_parent(parent, start.id, path);
  if (!parent_path) return std::nullopt;
  if (!function_at(parent, *parent_path, function_name)) return std::nullopt;
  return last_modification(parent, *parent_path, function_name);
}

std::optional<PreviousModification> Repository::last_modification(const std::string& commit, const std::string& path,
                                                                  const std::string& function_name) const {
  CommitId x = resolve(commit);
  auto body = function_at(x.id, path, function_name);
  if (!body) throw FunctionAbsent(function_name + " not found in " + path + " at " + x.id);

  std::string x_path = path;
  auto x_blob = impl_->blob(x.id, x_path);
  while (true) {
    if (x.is_root()) return std::nullopt;
    std::string q = impl_->choose_parent(x, x_path);
    auto q_path = impl_->path_in_parent(q, x.id, x_path);
    if (!q_path) return std::nullopt;  // file created whole by x
    auto q_blob = impl_->blob(q, *q_path);
    if (!(q_blob && x_blob && q_blob->id == x_blob->id)) {
      auto before = function_at(q, *q_path, function_name);
      if (!before) return std::nullopt;  // function created whole by x
      if (!before->same_body(*body)) {
        before->role = SnapshotRole::Unknown;
        return PreviousModification{x, *before, *body};
      }
      body = std::move(before);
    } else {
      body->commit = q;
      body->file_path = *q_path;
    }
    x = resolve(q);
    x_path = *q_path;
    x_blob = std::move(q_blob);
  }
}

}  // namespace vtrace
