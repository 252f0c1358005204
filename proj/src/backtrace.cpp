#include "vtrace/backtrace.hpp"

#include <algorithm>
#include <map>

#include "vtrace/errors.hpp"
#include "vtrace/parser.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

std::string_view to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::ScoreBelowThreshold: return "score_below_theta3";
    case TerminationReason::HistoryExhausted: return "history_exhausted";
    case TerminationReason::StepLimit: return "step_limit";
  }
  return "history_exhausted";
}

namespace {

std::string dirname_of(const std::string& path) {
  auto slash = path.rfind('/');
  return slash == std::string::npos ? std::string() : path.substr(0, slash + 1);
}

// Collapses "a/./b" and "a/x/../b".
std::string normalize_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    std::string p = path.substr(start, end - start);
    if (p == "..") {
      if (!parts.empty()) parts.pop_back();
    } else if (!p.empty() && p != ".") {
      parts.push_back(p);
    }
    start = end + 1;
  }
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "/") + p;
  return out;
}

StatementUnit synthetic_unit(int line, const std::string& text) {
  StatementUnit u;
  u.line = u.end_line = line;
  u.text = squeeze_whitespace(text);
  cfront::Node block = cfront::parse_statements(text, line);
  if (block.children.size() == 1) {
    u.full = block.children[0];
    u.header = cfront::statement_header(u.full);
  } else {
    u.full = u.header = cfront::Node(cfront::NodeKind::Unknown, u.text, {line, 0, line, 0});
  }
  return u;
}

std::vector<StatementRef> refs_of(const std::vector<StatementUnit>& units) {
  std::vector<StatementRef> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back({u.line, u.text});
  return out;
}

class DefinitionCache {
 public:
  DefinitionCache(const Repository& repo, bool enabled) : repo_(repo), enabled_(enabled) {}

  const cfront::DefinitionSet& get(const std::string& commit, const std::string& path) {
    static const cfront::DefinitionSet kEmpty;
    if (!enabled_) return kEmpty;
    auto key = commit + ":" + path;
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, definitions_at(repo_, commit, path)).first;
    return it->second;
  }

 private:
  const Repository& repo_;
  bool enabled_;
  std::map<std::string, cfront::DefinitionSet> cache_;
};

CommitId blame_origin(const Repository& repo, const std::string& commit, const std::string& path,
                      const std::vector<TracedStatement>& sv, std::vector<std::string>& warnings) {
  std::set<int> lines;
  for (const auto& s : sv) lines.insert(s.line);
  try {
    std::vector<CommitId> origins;
    std::set<std::string> seen;
    for (const auto& e : repo.blame_lines(commit, path, lines))
      if (seen.insert(e.origin_commit).second) origins.push_back(repo.resolve(e.origin_commit));
    if (auto c = earliest_commit(repo, origins)) return *c;
  } catch (const Error& e) {
    warnings.push_back(std::string("blame fallback failed: ") + e.what());
  }
  return repo.resolve(commit);
}

}  // namespace

cfront::DefinitionSet definitions_at(const Repository& repo, const std::string& commit, const std::string& path) {
  cfront::DefinitionSet defs;
  auto text = repo.file_at(commit, path);
  if (!text) return defs;
  std::optional<std::vector<std::string>> all_files;
  for (const auto& target : cfront::include_targets(*text)) {
    std::string candidate = normalize_path(dirname_of(path) + target);
    auto header = repo.file_at(commit, candidate);
    if (!header) {
      if (!all_files) all_files = repo.list_files(commit);
      for (const auto& f : *all_files)
        if (f == target || (f.size() > target.size() && f.compare(f.size() - target.size(), target.size(), target) == 0 &&
                            f[f.size() - target.size() - 1] == '/')) {
          header = repo.file_at(commit, f);
          break;
        }
    }
    if (header) defs.add_source(*header, true);
  }
  // The file's own definitions win over same-named ones from headers.
  defs.add_source(*text, true);
  return defs;
}

std::optional<CommitId> earliest_commit(const Repository& repo, const std::vector<CommitId>& commits) {
  if (commits.empty()) return std::nullopt;
  CommitId best = commits.front();
  for (std::size_t i = 1; i < commits.size(); ++i) {
    const CommitId& c = commits[i];
    if (c.id == best.id) continue;
    if (repo.is_ancestor(c.id, best.id)) {
      best = c;
    } else if (!repo.is_ancestor(best.id, c.id) &&
               (c.timestamp < best.timestamp || (c.timestamp == best.timestamp && c.id < best.id))) {
      best = c;
    }
  }
  return best;
}

HistoryTrace backtrace_vic(const Repository& repo, const std::string& start_commit, const std::string& path,
                           const std::string& function_name, std::vector<TracedStatement> sv,
                           const BacktraceOptions& options) {
  options.thresholds.validate();
  HistoryTrace trace;
  trace.function_name = function_name;
  trace.file_path = path;
  if (sv.empty()) throw EmptySet("backtrace needs at least one vulnerable statement");

  DefinitionCache defs(repo, options.use_definitions);
  std::string anchor = repo.resolve(start_commit).id;
  std::string anchor_path = path;
  auto current = repo.function_at(anchor, anchor_path, function_name);
  if (!current) throw FunctionAbsent(function_name + " not found in " + path + " at " + anchor);
  bool first = true;

  while (true) {
    if (static_cast<int>(trace.steps.size()) >= options.step_limit) {
      trace.terminated_reason = TerminationReason::StepLimit;
      trace.warnings.push_back("step limit of " + std::to_string(options.step_limit) + " reached");
      return trace;
    }
    auto pm = first ? repo.last_modification(anchor, anchor_path, function_name)
                    : repo.previous_modification(anchor, anchor_path, function_name);
    first = false;
    if (!pm) {
      trace.terminated_reason = TerminationReason::HistoryExhausted;
      trace.vic = blame_origin(repo, current->commit.empty() ? anchor : current->commit, current->file_path, sv,
                               trace.warnings);
      return trace;
    }

    // The post-image is the current body, possibly shifted within the file.
    const int shift = pm->post.first_line - current->first_line;
    for (auto& s : sv) s.line += shift;

    CommitComparison cmp;
    cmp.commit = pm->commit;
    cmp.file_path = pm->post.file_path;
    auto post_units = statement_units(pm->post);
    auto pre_units = statement_units(pm->pre);
    cmp.post_statements = refs_of(post_units);
    cmp.pre_statements = refs_of(pre_units);

    ComparisonContext ctx;
    ctx.sv_defs = &defs.get(pm->commit.id, pm->post.file_path);
    ctx.candidate_defs = &defs.get(pm->pre.commit, pm->pre.file_path);
    ctx.inline_config = options.inline_config;

    for (const auto& s : sv) {
      const StatementUnit* unit = unit_at(post_units, s.line);
      StatementUnit fallback;
      if (!unit || squeeze_whitespace(unit->text).empty()) {
        fallback = synthetic_unit(s.line, s.text);
        unit = &fallback;
      }
      StatementMatch m = match_statement(*unit, pre_units, options.thresholds, ctx);
      m.sv_line = s.line;
      m.weight = s.weight;
      m.sensitive = s.sensitive;
      cmp.per_statement.push_back(std::move(m));
    }
    cmp.similarity_score = compute_similarity_score(cmp.per_statement);
    trace.steps.push_back(cmp);
    if (options.on_step) options.on_step(trace.steps.back());

    if (cmp.similarity_score < options.thresholds.score) {
      trace.terminated_reason = TerminationReason::ScoreBelowThreshold;
      trace.vic = pm->commit;
      return trace;
    }

    // Follow the older spelling of every matched statement.
    std::vector<TracedStatement> next;
    for (std::size_t i = 0; i < sv.size(); ++i) {
      const auto& m = cmp.per_statement[i];
      if (!m.matched || !m.matched_line) continue;
      TracedStatement t = sv[i];
      t.line = *m.matched_line;
      t.text = m.matched_text;
      if (std::none_of(next.begin(), next.end(), [&](const TracedStatement& o) { return o.line == t.line; }))
        next.push_back(std::move(t));
    }
    if (next.empty()) {
      trace.terminated_reason = TerminationReason::ScoreBelowThreshold;
      trace.vic = pm->commit;
      return trace;
    }
    sv = std::move(next);
    anchor = pm->commit.id;
    anchor_path = pm->post.file_path;
    current = pm->pre;
  }
}

HistoryTrace backtrace_vic(const Repository& repo, const PatchedFunction& fn, const std::vector<WeightedStatement>& sv,
                           const BacktraceOptions& options) {
  if (fn.pre_body.lines.empty())
    throw FunctionAbsent(fn.function_name + " has no pre-patch body to trace");
  std::vector<TracedStatement> traced;
  for (const auto& w : sv) traced.push_back({w.line, w.text, w.weight, w.sensitive_callee.has_value()});
  return backtrace_vic(repo, fn.pre_body.commit, fn.pre_body.file_path, fn.function_name, std::move(traced), options);
}

}  // namespace vtrace
