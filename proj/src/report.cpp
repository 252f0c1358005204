#include "vtrace/report.hpp"

#include <cstdio>
#include <set>

#include "vtrace/embedded_data.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

using ojson = nlohmann::ordered_json;

std::string_view report_schema() { return embedded::report_schema(); }

ojson commit_to_json(const CommitId& c) {
  ojson j;
  j["id"] = c.id;
  j["timestamp"] = c.timestamp;
  return j;
}

namespace {

ojson optional_line(const std::optional<int>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson tag_names(const std::vector<TagRef>& tags) {
  ojson a = ojson::array();
  for (const auto& t : tags) a.push_back(t.name);
  return a;
}

ojson strings(const std::vector<std::string>& v) {
  ojson a = ojson::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

}  // namespace

ojson flow_to_json(const DangerousFlow& flow) {
  ojson j;
  j["commit"] = flow.commit;
  j["sliced_post_image"] = flow.sliced_post_image;
  ojson rows = ojson::array();
  for (const auto& s : flow.statements) {
    ojson r;
    r["row"] = s.row;
    r["kind"] = std::string(to_string(s.kind));
    r["origin"] = std::string(to_string(s.origin));
    const FlowRow* fr = flow.row(s.row);
    r["old_line"] = fr ? optional_line(fr->old_line) : ojson(nullptr);
    r["text"] = s.text;
    rows.push_back(std::move(r));
  }
  j["statements"] = std::move(rows);
  return j;
}

ojson comparison_to_json(const CommitComparison& c, const std::string& function_name) {
  ojson j;
  j["function"] = function_name;
  j["commit"] = commit_to_json(c.commit);
  j["file"] = c.file_path;
  j["similarity_score"] = c.similarity_score;
  ojson per = ojson::array();
  for (const auto& m : c.per_statement) {
    ojson s;
    s["sv_line"] = m.sv_line;
    s["sv_text"] = m.sv_text;
    s["weight"] = m.weight;
    s["matched"] = m.matched;
    s["channel"] = std::string(to_string(m.channel));
    s["score"] = m.score;
    s["line_score"] = m.line_score;
    s["ast_score"] = m.ast_score ? ojson(*m.ast_score) : ojson(nullptr);
    s["matched_line"] = optional_line(m.matched_line);
    s["matched_text"] = m.matched_text;
    per.push_back(std::move(s));
  }
  j["per_statement"] = std::move(per);
  j["pre_statement_count"] = c.pre_statements.size();
  j["post_statement_count"] = c.post_statements.size();
  return j;
}

ojson trace_to_json(const HistoryTrace& trace) {
  ojson j;
  j["vic"] = trace.vic ? commit_to_json(*trace.vic) : ojson(nullptr);
  j["terminated_reason"] = std::string(to_string(trace.terminated_reason));
  ojson steps = ojson::array();
  for (const auto& c : trace.steps) {
    ojson s;
    s["commit"] = commit_to_json(c.commit);
    s["file"] = c.file_path;
    s["similarity_score"] = c.similarity_score;
    int matched = 0;
    for (const auto& m : c.per_statement) matched += m.matched ? 1 : 0;
    s["matched"] = matched;
    s["statements"] = c.per_statement.size();
    steps.push_back(std::move(s));
  }
  j["steps"] = std::move(steps);
  j["warnings"] = strings(trace.warnings);
  return j;
}

ojson verdict_to_json(const VersionVerdict& v, const std::vector<std::string>& ranges) {
  ojson j;
  j["vic"] = commit_to_json(v.vic);
  j["pc"] = v.pc ? commit_to_json(*v.pc) : ojson(nullptr);
  j["tags_from_vic"] = tag_names(v.tags_from_vic);
  j["tags_from_pc"] = tag_names(v.tags_from_pc);
  j["vulnerable"] = tag_names(v.vulnerable);
  j["ranges"] = strings(ranges);
  j["warnings"] = strings(v.warnings);
  return j;
}

ojson report_to_json(const AnalysisReport& r, bool include_timings) {
  ojson j;
  j["schema_version"] = std::string(kReportSchemaVersion);
  ojson cfg;
  for (const auto& [k, v] : config_echo(r.config)) cfg[k] = v;
  j["config"] = std::move(cfg);

  ojson cve;
  cve["cve_id"] = r.config.cve.cve_id;
  cve["cwe_id"] = r.config.cve.cwe_id;
  cve["description"] = r.config.cve.description;
  j["cve"] = std::move(cve);

  ojson patch;
  patch["commit"] = r.patch_commit;
  patch["diff_mode"] = r.diff_mode;
  patch["shape"] = r.shape ? ojson(std::string(to_string(*r.shape))) : ojson(nullptr);
  ojson skipped = ojson::array();
  for (const auto& s : r.skipped) {
    ojson o;
    o["file"] = s.file_path;
    o["kind"] = std::string(to_string(s.kind));
    o["line"] = s.line_number;
    o["reason"] = s.reason;
    skipped.push_back(std::move(o));
  }
  patch["skipped_lines"] = std::move(skipped);
  j["patch"] = std::move(patch);

  ojson fns = ojson::array();
  for (const auto& f : r.functions) {
    ojson o;
    o["function"] = f.function_name;
    o["file"] = f.file_path;
    o["status"] = f.failures.empty() ? "ok" : "failed";
    o["failures"] = strings(f.failures);
    o["dangerous_flow"] = f.flow ? flow_to_json(*f.flow) : ojson(nullptr);
    if (f.refined) {
      ojson sv;
      sv["degraded"] = f.refined->degraded;
      sv["attempts"] = f.refined->attempts;
      sv["logic_summary"] = f.refined->statements.logic_summary;
      ojson list = ojson::array();
      for (std::size_t i = 0; i < f.weighted.size(); ++i) {
        const auto& w = f.weighted[i];
        ojson s;
        s["row"] = i < f.weighted_rows.size() ? ojson(f.weighted_rows[i]) : ojson(nullptr);
        s["old_line"] = w.line;
        s["text"] = w.text;
        s["weight"] = w.weight;
        s["sensitive_callee"] = w.sensitive_callee ? ojson(*w.sensitive_callee) : ojson(nullptr);
        list.push_back(std::move(s));
      }
      sv["statements"] = std::move(list);
      sv["warnings"] = strings(f.refined->warnings);
      o["vulnerable_statements"] = std::move(sv);
    } else {
      o["vulnerable_statements"] = nullptr;
    }
    o["history"] = f.trace ? trace_to_json(*f.trace) : ojson(nullptr);
    fns.push_back(std::move(o));
  }
  j["functions"] = std::move(fns);
  j["vic"] = r.vic ? commit_to_json(*r.vic) : ojson(nullptr);
  j["versions"] = r.verdict ? verdict_to_json(*r.verdict, r.ranges) : ojson(nullptr);

  ojson status;
  status["exit_code"] = r.exit_code();
  status["degraded"] = strings(r.degraded);
  status["errors"] = strings(r.errors);
  j["status"] = std::move(status);

  if (include_timings) {
    ojson t;
    t["extraction"] = r.timings.extraction_ms;
    t["detection"] = r.timings.detection_ms;
    t["delineation"] = r.timings.delineation_ms;
    t["total"] = r.timings.total_ms;
    j["timings_ms"] = std::move(t);
  }
  return j;
}

namespace {

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

std::string short_id(const std::string& id) { return id.substr(0, 12); }

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string render_markdown(const AnalysisReport& r, bool include_timings) {
  std::string md;
  std::string title = r.config.cve.cve_id.empty() ? std::string("Vulnerability analysis") : r.config.cve.cve_id;
  md += "# " + title + "\n\n";
  md += "- Patch: " + (r.diff_mode ? std::string("uncommitted diff against ") : std::string()) +
        "`" + short_id(r.patch_commit) + "`\n";
  if (r.shape) md += "- Patch shape: " + std::string(to_string(*r.shape)) + "\n";
  md += "- VIC: " + (r.vic ? "`" + short_id(r.vic->id) + "`" : std::string("not found")) + "\n";
  md += "- Exit status: " + std::to_string(r.exit_code()) + "\n\n";

  for (const auto& f : r.functions) {
    md += "## " + f.function_name + " (" + f.file_path + ")\n\n";
    for (const auto& e : f.failures) md += "- failure: " + md_escape(e) + "\n";
    if (f.refined && !f.refined->statements.logic_summary.empty())
      md += "Logic: " + md_escape(f.refined->statements.logic_summary) + "\n\n";
    if (!f.weighted.empty()) {
      md += "| Line | Weight | Sensitive | Statement |\n|---:|---:|---|---|\n";
      for (const auto& w : f.weighted)
        md += "| " + std::to_string(w.line) + " | " + fixed3(w.weight) + " | " + w.sensitive_callee.value_or("") +
              " | `" + md_escape(std::string(trim(w.text))) + "` |\n";
      md += "\n";
    }
    if (f.trace) {
      md += "Trace (" + std::string(to_string(f.trace->terminated_reason)) + "):\n\n";
      md += "| Commit | Score |\n|---|---:|\n";
      for (const auto& s : f.trace->steps)
        md += "| `" + short_id(s.commit.id) + "` | " + fixed3(s.similarity_score) + " |\n";
      md += "\n";
    }
  }

  md += "## Vulnerable versions\n\n";
  if (r.verdict) {
    md += "| Tag | Status |\n|---|---|\n";
    std::set<std::string> bad;
    for (const auto& t : r.verdict->vulnerable) bad.insert(t.name);
    for (const auto& t : r.verdict->tags_from_vic)
      md += "| " + t.name + " | " + (bad.count(t.name) ? "vulnerable" : "fixed") + " |\n";
    md += "\n";
    for (const auto& range : r.ranges) md += "- " + range + "\n";
    for (const auto& w : r.verdict->warnings) md += "- warning: " + md_escape(w) + "\n";
  } else {
    md += "No verdict.\n";
  }
  if (!r.degraded.empty() || !r.errors.empty()) {
    md += "\n## Problems\n\n";
    for (const auto& d : r.degraded) md += "- degraded: " + md_escape(d) + "\n";
    for (const auto& e : r.errors) md += "- error: " + md_escape(e) + "\n";
  }
  if (include_timings)
    md += "\nTimings (ms): extraction " + fixed3(r.timings.extraction_ms) + ", detection " +
          fixed3(r.timings.detection_ms) + ", delineation " + fixed3(r.timings.delineation_ms) + "\n";
  return md;
}

}  // namespace

std::string render_report(const AnalysisReport& report, OutputFormat format, bool include_timings) {
  if (format == OutputFormat::Markdown) return render_markdown(report, include_timings);
  return report_to_json(report, include_timings).dump(2) + "\n";
}

}  // namespace vtrace
