// vtrace: locate the commit that introduced a patched vulnerability and the
// release tags it affects.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "vtrace/config.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/parser.hpp"
#include "vtrace/pipeline.hpp"
#include "vtrace/report.hpp"
#include "vtrace/similarity.hpp"
#include "vtrace/version_range.hpp"

namespace {

using vtrace::RunConfig;
using ojson = nlohmann::ordered_json;

// Flags that map one-to-one onto configuration keys.
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::string config_file;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  void add_common(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file");
    add(app, "--repo", "repo", "path to the git repository");
    add(app, "--commit", "commit", "patch commit");
    add(app, "--diff", "diff", "unified diff against HEAD instead of a commit");
    add(app, "--direction", "direction", "slice direction: both, backward or forward");
    add(app, "--tag-pattern", "tag_pattern", "tag pattern below refs/tags/");
  }

  void add_analysis(CLI::App* app) {
    add(app, "--cve", "cve", "CVE id");
    add(app, "--cwe", "cwe", "CWE id");
    add(app, "--description", "description", "CVE description");
    add(app, "--strategy", "strategy", "zero_shot, few_shot or few_shot_cot");
    add(app, "--theta1", "theta1", "line similarity threshold");
    add(app, "--theta2", "theta2", "syntax similarity threshold");
    add(app, "--theta3", "theta3", "similarity score threshold");
    add(app, "--weight-v", "weight_v", "weight of statements reaching sensitive functions");
    add(app, "--weight-d", "weight_d", "default statement weight");
    add(app, "--gating", "gating", "gated_with_fallback, gated_strict or ungated");
    add(app, "--backend", "backend", "stub, chat or cache");
    add(app, "--stub-answers", "stub_answers", "JSON file of canned answers for the stub backend");
    add(app, "--backend-url", "backend_url", "chat-completion base URL");
    add(app, "--model", "model", "model name");
    add(app, "--cache-dir", "cache_dir", "response cache directory");
    add(app, "--format", "format", "json or markdown");
    add(app, "--step-limit", "step_limit", "maximum backtrace steps per function");
    add(app, "--trace-log", "trace_log", "write one JSON line per compared commit");
    add(app, "--inline-depth", "inline_depth", "macro and static function inlining depth");
    add(app, "--sensitive-table", "sensitive_table", "extra sensitive function rows (JSON)");
    add(app, "--exemplars", "exemplars", "few-shot exemplar file (JSON)");
  }

  // Defaults < environment < config file < flags.
  RunConfig build() const {
    RunConfig cfg;
    vtrace::apply_environment(cfg);
    if (!config_file.empty()) vtrace::apply_config_file(cfg, config_file);
    for (const auto& [k, v] : values) vtrace::set_config_value(cfg, k, v);
    return cfg;
  }
};

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw vtrace::IoError("cannot write " + path);
  out << text;
}

int run_analyze(const ConfigFlags& flags, const std::string& output, bool no_timings) {
  RunConfig cfg = flags.build();
  auto report = vtrace::run_pipeline(cfg);
  write_output(vtrace::render_report(report, cfg.format, !no_timings), output);
  for (const auto& e : report.errors) std::cerr << "error: " << e << "\n";
  for (const auto& d : report.degraded) std::cerr << "degraded: " << d << "\n";
  return report.exit_code();
}

int run_slice(const ConfigFlags& flags, const std::string& output) {
  RunConfig cfg = flags.build();
  if (cfg.commit.empty() == cfg.diff_path.empty()) throw vtrace::ConfigError("exactly one of --commit or --diff is required");
  vtrace::RepoOptions ro;
  ro.tag_pattern = cfg.tag_pattern;
  auto repo = vtrace::Repository::open(cfg.repo_path, ro);
  auto lp = vtrace::load_patch_source(repo, cfg);
  ojson out;
  out["patch"] = lp.patch.commit.id;
  out["shape"] = std::string(vtrace::to_string(vtrace::classify_patch(lp.patch)));
  ojson fns = ojson::array();
  int status = 0;
  for (const auto& fn : lp.extraction.functions) {
    ojson f;
    f["function"] = fn.function_name;
    f["file"] = fn.file_path;
    try {
      f["dangerous_flow"] = vtrace::flow_to_json(vtrace::extract_dangerous_flow(fn, cfg.direction));
    } catch (const vtrace::Error& e) {
      f["error"] = e.code() + ": " + e.what();
      status = 2;
    }
    fns.push_back(std::move(f));
  }
  out["functions"] = std::move(fns);
  ojson skipped = ojson::array();
  for (const auto& s : lp.extraction.skipped)
    skipped.push_back({{"file", s.file_path}, {"line", s.line_number}, {"reason", s.reason}});
  out["skipped_lines"] = std::move(skipped);
  write_output(out.dump(2) + "\n", output);
  return status;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vtrace::IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_compare(const std::string& old_stmt, const std::string& new_stmt, const std::vector<std::string>& def_files,
                double theta1, double theta2, int inline_depth) {
  vtrace::cfront::DefinitionSet defs;
  for (const auto& f : def_files) defs.add_source(read_text(f));
  vtrace::cfront::InlineConfig ic;
  ic.max_depth = inline_depth;
  ojson out;
  const double line = vtrace::line_similarity(old_stmt, new_stmt);
  out["line_similarity"] = line;
  std::optional<double> ast;
  try {
    ast = vtrace::ast_similarity(old_stmt, new_stmt, defs, defs, ic);
    out["ast_similarity"] = *ast;
  } catch (const vtrace::ParseFailure& e) {
    out["ast_similarity"] = nullptr;
    out["ast_error"] = e.what();
  }
  const char* channel = line >= theta1 ? "line" : (ast && *ast >= theta2) ? "ast" : "none";
  out["matched"] = std::string(channel) != "none";
  out["channel"] = channel;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_delineate(const ConfigFlags& flags, const std::string& vic, const std::string& pc, const std::string& cve,
                  const std::string& output) {
  RunConfig cfg = flags.build();
  vtrace::RepoOptions ro;
  ro.tag_pattern = cfg.tag_pattern;
  auto repo = vtrace::Repository::open(cfg.repo_path, ro);
  std::optional<std::string> patch;
  if (!pc.empty()) patch = pc;
  auto verdict = vtrace::delineate(repo, vic, patch, cve);
  auto ranges = vtrace::vulnerable_ranges(verdict, repo.tags());
  ojson out = vtrace::verdict_to_json(verdict, ranges);
  write_output(out.dump(2) + "\n", output);
  for (const auto& w : verdict.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int run_batch(const ConfigFlags& flags, const std::string& input, int jobs, const std::string& output,
              bool no_timings) {
  const RunConfig base = flags.build();
  auto items = nlohmann::json::parse(read_text(input));
  if (!items.is_array()) throw vtrace::ConfigError("batch input must be a JSON array of objects");
  std::vector<RunConfig> configs;
  for (const auto& item : items) {
    if (!item.is_object()) throw vtrace::ConfigError("batch entries must be objects");
    RunConfig cfg = base;
    for (auto it = item.begin(); it != item.end(); ++it)
      vtrace::set_config_value(cfg, it.key(), it.value().is_string() ? it.value().get<std::string>() : it.value().dump());
    configs.push_back(std::move(cfg));
  }
  // Every entry is validated before any analysis starts.
  std::string problems;
  for (std::size_t i = 0; i < configs.size(); ++i)
    for (const auto& p : configs[i].problems()) problems += "\n  - entry " + std::to_string(i) + ": " + p;
  if (!problems.empty()) throw vtrace::ConfigError("invalid batch:" + problems);

  std::vector<std::optional<vtrace::AnalysisReport>> reports(configs.size());
  std::vector<std::string> crashes(configs.size());
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= configs.size()) return;
        i = next++;
      }
      try {
        reports[i] = vtrace::run_pipeline(configs[i]);
      } catch (const std::exception& e) {
        crashes[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int status = 0;
  ojson out = ojson::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i]) {
      out.push_back(vtrace::report_to_json(*reports[i], !no_timings));
      int code = reports[i]->exit_code();
      if (code == 1 || (code == 2 && status == 0)) status = code;
    } else {
      out.push_back({{"error", crashes[i]}});
      status = 1;
    }
  }
  write_output(out.dump(2) + "\n", output);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace a patched vulnerability back to the commit that introduced it and list affected tags."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vtrace 0.3.0");

  ConfigFlags analyze_flags, slice_flags, delineate_flags, batch_flags;
  std::string output;
  bool no_timings = false;

  auto* analyze = app.add_subcommand("analyze", "run the full pipeline");
  analyze_flags.add_common(analyze);
  analyze_flags.add_analysis(analyze);
  analyze->add_option("-o,--output", output, "write the report here instead of stdout");
  analyze->add_flag("--no-timings", no_timings, "leave phase timings out of the report");

  auto* slice = app.add_subcommand("slice", "print the dangerous flow of each patched function");
  slice_flags.add_common(slice);
  slice->add_option("-o,--output", output, "output file");

  std::string old_stmt, new_stmt;
  std::vector<std::string> def_files;
  double theta1 = 0.9, theta2 = 0.8;
  int inline_depth = 1;
  auto* compare = app.add_subcommand("compare", "compare two statements");
  compare->add_option("--old", old_stmt, "older statement text")->required();
  compare->add_option("--new", new_stmt, "newer statement text")->required();
  compare->add_option("--defs", def_files, "C sources whose macros and functions are inlined");
  compare->add_option("--theta1", theta1, "line similarity threshold")->check(CLI::Range(0.0, 1.0));
  compare->add_option("--theta2", theta2, "syntax similarity threshold")->check(CLI::Range(0.0, 1.0));
  compare->add_option("--inline-depth", inline_depth, "inlining depth")->check(CLI::NonNegativeNumber);

  std::string vic, pc, cve;
  auto* delin = app.add_subcommand("delineate", "list tags reachable from vic but not from the patch");
  delineate_flags.add_common(delin);
  delin->add_option("--vic", vic, "vulnerability-introducing commit")->required();
  delin->add_option("--pc", pc, "patch commit (omit for an unreleased fix)");
  delin->add_option("--cve", cve, "CVE id echoed in the output");
  delin->add_option("-o,--output", output, "output file");

  std::string batch_input;
  int jobs = 2;
  auto* batch = app.add_subcommand("batch", "analyze many patches from a JSON list");
  batch_flags.add_common(batch);
  batch_flags.add_analysis(batch);
  batch->add_option("--input", batch_input, "JSON array of objects holding configuration keys")->required();
  batch->add_option("-j,--jobs", jobs, "parallel analyses")->check(CLI::PositiveNumber);
  batch->add_option("-o,--output", output, "output file");
  batch->add_flag("--no-timings", no_timings, "leave phase timings out of the reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*analyze) return run_analyze(analyze_flags, output, no_timings);
    if (*slice) return run_slice(slice_flags, output);
    if (*compare) return run_compare(old_stmt, new_stmt, def_files, theta1, theta2, inline_depth);
    if (*delin) return run_delineate(delineate_flags, vic, pc, cve, output);
    if (*batch) return run_batch(batch_flags, batch_input, jobs, output, no_timings);
  } catch (const vtrace::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const vtrace::Error& e) {
    std::cerr << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
