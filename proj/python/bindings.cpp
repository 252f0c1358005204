#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vtrace/config.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/llm.hpp"
#include "vtrace/patch.hpp"
#include "vtrace/pipeline.hpp"
#include "vtrace/report.hpp"
#include "vtrace/similarity.hpp"
#include "vtrace/slicer.hpp"
#include "vtrace/version_range.hpp"

namespace py = pybind11;
using namespace vtrace;

namespace {

// Structured results cross the boundary as JSON text; the Python package
// turns them into dicts.
std::string hunks_json(const std::vector<Hunk>& hunks) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& h : hunks) {
    nlohmann::ordered_json j;
    j["file"] = h.file_path;
    j["old_file"] = h.old_path;
    j["header"] = h.header;
    j["old_start"] = h.old_start;
    j["old_count"] = h.old_count;
    j["new_start"] = h.new_start;
    j["new_count"] = h.new_count;
    auto changes = nlohmann::ordered_json::array();
    for (const auto& c : h.changes) {
      nlohmann::ordered_json cj;
      cj["kind"] = std::string(to_string(c.kind));
      cj["old"] = c.old_number ? nlohmann::ordered_json(*c.old_number) : nlohmann::ordered_json(nullptr);
      cj["new"] = c.new_number ? nlohmann::ordered_json(*c.new_number) : nlohmann::ordered_json(nullptr);
      cj["text"] = c.text;
      changes.push_back(std::move(cj));
    }
    j["changes"] = std::move(changes);
    out.push_back(std::move(j));
  }
  return out.dump();
}

SliceDirection direction_from(const std::string& s) {
  if (s == "both") return SliceDirection::Both;
  if (s == "backward") return SliceDirection::BackwardOnly;
  if (s == "forward") return SliceDirection::ForwardOnly;
  throw ConfigError("direction must be both, backward or forward");
}

// Flows of every function touched by `diff_text`, applied to `pre_files`.
std::vector<DangerousFlow> extract_flows(const std::string& diff_text, const std::map<std::string, std::string>& pre_files,
                                         const std::string& direction) {
  auto hunks = parse_unified_diff(diff_text);
  FileSource pre = [&](const std::string& path) -> std::optional<std::string> {
    auto it = pre_files.find(path);
    if (it == pre_files.end()) return std::nullopt;
    return it->second;
  };
  FileSource post = [&](const std::string& path) -> std::optional<std::string> {
    std::vector<Hunk> mine;
    std::string source = path;
    for (const auto& h : hunks)
      if (h.file_path == path) {
        mine.push_back(h);
        if (!h.old_path.empty()) source = h.old_path;
      }
    std::optional<std::string> base;
    if (!mine.empty() && mine.front().old_path.empty()) base = std::string();
    else base = pre(source);
    if (!base || mine.empty()) return base;
    auto applied = apply_hunks(*base, mine);
    if (!applied) throw MalformedDiff(0, "diff does not apply to " + path);
    return applied;
  };
  auto extraction = extract_patched_functions(hunks, pre, post);
  std::vector<DangerousFlow> flows;
  const auto dir = direction_from(direction);
  for (const auto& fn : extraction.functions) flows.push_back(extract_dangerous_flow(fn, dir));
  return flows;
}

std::string analyze(const std::map<std::string, std::string>& settings, bool include_timings) {
  RunConfig cfg;
  for (const auto& [k, v] : settings) set_config_value(cfg, k, v);
  AnalysisReport report;
  {
    py::gil_scoped_release release;
    report = run_pipeline(cfg);
  }
  return report_to_json(report, include_timings).dump();
}

}  // namespace

PYBIND11_MODULE(_vtrace, m) {
  m.doc() = "Vulnerability-introducing commit tracing over git histories of C code.";

  static py::exception<Error> error(m, "VtraceError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (e.code() + ": " + e.what()).c_str());
    }
  });

  m.def("parse_unified_diff", [](const std::string& text) { return hunks_json(parse_unified_diff(text)); },
        py::arg("diff_text"));
  m.def("line_similarity", [](const std::string& a, const std::string& b) { return line_similarity(a, b); });
  m.def(
      "ast_similarity",
      [](const std::string& a, const std::string& b, const std::string& definitions, int inline_depth) {
        cfront::DefinitionSet defs;
        if (!definitions.empty()) defs.add_source(definitions);
        cfront::InlineConfig ic;
        ic.max_depth = inline_depth;
        return ast_similarity(a, b, defs, defs, ic);
      },
      py::arg("a"), py::arg("b"), py::arg("definitions") = "", py::arg("inline_depth") = 1);
  m.def("compute_similarity_score",
        py::overload_cast<int, int, int, int, double, double>(&compute_similarity_score), py::arg("sensitive_total"),
        py::arg("sensitive_matched"), py::arg("default_total"), py::arg("default_matched"), py::arg("weight_v") = 2.0,
        py::arg("weight_d") = 1.0);

  py::class_<DangerousFlow>(m, "DangerousFlow")
      .def_readonly("function_name", &DangerousFlow::function_name)
      .def_readonly("file_path", &DangerousFlow::file_path)
      .def_property_readonly("rows", [](const DangerousFlow& f) {
        auto rows = f.row_numbers();
        return std::vector<int>(rows.begin(), rows.end());
      })
      .def("render", &render_flow)
      .def("to_json", [](const DangerousFlow& f) { return flow_to_json(f).dump(); });

  m.def("extract_flows", &extract_flows, py::arg("diff_text"), py::arg("pre_files"), py::arg("direction") = "both");

  m.def(
      "build_prompt",
      [](const std::string& cve, const std::string& cwe, const std::string& description, const DangerousFlow& flow,
         const std::string& strategy) {
        auto bundle = build_prompt({cve, cwe, description}, flow, prompt_strategy_from_string(strategy));
        return std::make_pair(bundle.system_text, bundle.user_text);
      },
      py::arg("cve_id"), py::arg("cwe_id"), py::arg("description"), py::arg("flow"),
      py::arg("strategy") = "few_shot_cot");
  m.def(
      "parse_response",
      [](const std::string& raw, const DangerousFlow& flow) {
        auto r = parse_response(raw, flow);
        std::vector<int> lines(r.vulnerable_lines.begin(), r.vulnerable_lines.end());
        return py::make_tuple(r.vulnerability_logic, lines, r.warnings);
      },
      py::arg("raw"), py::arg("flow"));

  m.def(
      "delineate",
      [](const std::string& repo_path, const std::string& vic, std::optional<std::string> pc, const std::string& cve) {
        auto repo = Repository::open(repo_path);
        auto verdict = delineate(repo, vic, pc, cve);
        return verdict_to_json(verdict, vulnerable_ranges(verdict, repo.tags())).dump();
      },
      py::arg("repo"), py::arg("vic"), py::arg("pc") = py::none(), py::arg("cve_id") = "");
  m.def("analyze", &analyze, py::arg("settings"), py::arg("include_timings") = false);
  m.def("report_schema", [] { return std::string(report_schema()); });
}
