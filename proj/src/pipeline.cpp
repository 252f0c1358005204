#include "vtrace/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "vtrace/errors.hpp"
#include "vtrace/parser.hpp"
#include "vtrace/report.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

int AnalysisReport::exit_code() const {
  if (!errors.empty()) return 1;
  if (!degraded.empty()) return 2;
  return 0;
}

std::shared_ptr<ModelBackend> make_backend(const RunConfig& cfg) {
  std::shared_ptr<ModelBackend> inner;
  switch (cfg.backend) {
    case BackendKind::Stub:
      inner = cfg.stub_answers.empty() ? std::make_shared<StubBackend>(std::map<std::string, std::string>{})
                                       : std::shared_ptr<ModelBackend>(StubBackend::from_file(cfg.stub_answers));
      break;
    case BackendKind::Chat:
      inner = std::make_shared<ChatCompletionBackend>(cfg.backend_settings);
      break;
    case BackendKind::CacheOnly:
      break;
  }
  if (cfg.cache_dir.empty()) return inner;
  // The salt keeps answers of different models apart.
  std::string salt = cfg.backend == BackendKind::Stub ? "stub" : "chat:" + cfg.backend_settings.model;
  return std::make_shared<CachedBackend>(inner, cfg.cache_dir, salt);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double ms_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

// Definitions of functions called by the vulnerable statements that live in the repository, so
// wrappers of sensitive functions can be recognized.
cfront::DefinitionSet wrapper_definitions(const Repository& repo, const std::string& commit,
                                          const std::vector<StatementText>& statements,
                                          const SensitiveFunctionTable& table, int depth) {
  cfront::DefinitionSet defs;
  std::set<std::string> known;
  for (const auto& [type, names] : table.entries) known.insert(names.begin(), names.end());
  std::vector<std::string> frontier;
  std::set<std::string> seen;
  for (const auto& s : statements)
    for (const auto& c : called_functions(cfront::parse_statements(s.text)))
      if (!known.count(c) && seen.insert(c).second) frontier.push_back(c);

  for (int level = 0; level < depth && !frontier.empty(); ++level) {
    std::vector<std::string> next;
    for (const auto& name : frontier) {
      std::vector<std::string> files;
      try {
        files = repo.grep_files(commit, name);
      } catch (const Error&) {
        continue;
      }
      for (const auto& f : files) {
        auto text = repo.file_at(commit, f);
        if (!text) continue;
        cfront::DefinitionSet tmp;
        tmp.add_source(*text, false);
        if (const auto* fn = tmp.function(name)) {
          defs.add_function(*fn);
          try {
            auto tree = cfront::parse_function_source(fn->source);
            if (tree.root)
              for (const auto& c : called_functions(*tree.root))
                if (!known.count(c) && seen.insert(c).second) next.push_back(c);
          } catch (const Error&) {
          }
          break;
        }
        if (const auto* m = tmp.macro(name)) {
          defs.add_macro(*m);
          break;
        }
      }
    }
    frontier = std::move(next);
  }
  return defs;
}

}  // namespace

LoadedPatch load_patch_source(const Repository& repo, const RunConfig& cfg) {
  LoadedPatch lp;
  if (!cfg.diff_path.empty()) {
    lp.diff_mode = true;
    const CommitId head = repo.head();
    lp.patch = make_patch(head, parse_unified_diff(read_file(cfg.diff_path)));
    std::map<std::string, std::vector<Hunk>> by_file;
    for (const auto& h : lp.patch.hunks) by_file[h.old_path.empty() ? h.file_path : h.old_path].push_back(h);
    FileSource pre = [&](const std::string& path) { return repo.file_at(head.id, path); };
    FileSource post = [&](const std::string& path) -> std::optional<std::string> {
      std::vector<Hunk> hunks;
      std::string source_path = path;
      for (const auto& h : lp.patch.hunks)
        if (h.file_path == path) {
          hunks.push_back(h);
          if (!h.old_path.empty()) source_path = h.old_path;
        }
      bool created = !hunks.empty() && hunks.front().old_path.empty();
      auto base = created ? std::optional<std::string>(std::string()) : repo.file_at(head.id, source_path);
      if (!base) return std::nullopt;
      if (hunks.empty()) return base;
      auto applied = apply_hunks(*base, hunks);
      if (!applied) throw MalformedDiff(0, "diff does not apply to " + path + " at HEAD");
      return applied;
    };
    lp.extraction = extract_patched_functions(lp.patch.hunks, pre, post, head.id, "");
  } else {
    lp.patch = load_patch(repo, cfg.commit);
    lp.extraction = extract_patched_functions(repo, lp.patch);
  }
  return lp;
}

AnalysisReport run_pipeline(const RunConfig& cfg, std::shared_ptr<ModelBackend> backend) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  AnalysisReport report;
  report.config = cfg;
  report.diff_mode = !cfg.diff_path.empty();

  SensitiveFunctionTable table = SensitiveFunctionTable::defaults();
  if (!cfg.sensitive_table.empty()) table.merge(SensitiveFunctionTable::from_json(read_file(cfg.sensitive_table)));
  std::optional<ExemplarLibrary> custom_exemplars;
  if (!cfg.exemplars_path.empty()) custom_exemplars = ExemplarLibrary::from_json(read_file(cfg.exemplars_path));
  if (!backend) backend = make_backend(cfg);

  auto finish = [&]() -> AnalysisReport {
    report.timings.total_ms = ms_since(start);
    return std::move(report);
  };

  std::optional<Repository> repo;
  LoadedPatch lp;
  auto phase = std::chrono::steady_clock::now();
  try {
    RepoOptions ro;
    ro.tag_pattern = cfg.tag_pattern;
    ro.first_parent_only = cfg.first_parent_only;
    repo = Repository::open(cfg.repo_path, ro);
    lp = load_patch_source(*repo, cfg);
    report.patch_commit = lp.patch.commit.id;
    report.shape = classify_patch(lp.patch);
  } catch (const Error& e) {
    report.errors.push_back(std::string("extraction: ") + e.code() + ": " + e.what());
    report.timings.extraction_ms = ms_since(phase);
    return finish();
  }
  report.skipped = lp.extraction.skipped;
  if (lp.extraction.functions.empty()) {
    report.errors.push_back("extraction: no changed C/C++ function in the patch");
    report.timings.extraction_ms = ms_since(phase);
    return finish();
  }

  // ---- dangerous flows and vulnerable statements ----
  const auto hint = vulnerability_type_for_cwe(cfg.cve.cwe_id);
  RefineOptions ropt;
  ropt.strategy = cfg.strategy;
  ropt.exemplars = custom_exemplars ? &*custom_exemplars : nullptr;
  for (const auto& fn : lp.extraction.functions) {
    FunctionReport fr;
    fr.function_name = fn.function_name;
    fr.file_path = fn.file_path;
    try {
      fr.flow = extract_dangerous_flow(fn, cfg.direction);
      fr.refined = refine(cfg.cve, *fr.flow, *backend, ropt);
      if (fr.refined->degraded)
        report.degraded.push_back("extraction: " + fn.function_name + ": model answer unusable, whole flow kept");
      std::vector<StatementText> texts;
      for (const auto& s : fr.refined->statements.statements)
        if (s.old_line) {
          texts.push_back({*s.old_line, s.text});
          fr.weighted_rows.push_back(s.row);
        }
      if (texts.empty()) throw EmptySet("no vulnerable statement exists before the patch");
      auto defs = wrapper_definitions(*repo, fn.pre_body.commit, texts, table, cfg.weights.wrapper_depth);
      fr.weighted = assign_weights(texts, table, defs, hint, cfg.weights);
    } catch (const Error& e) {
      fr.failures.push_back(std::string("extraction: ") + e.code() + ": " + e.what());
    }
    report.functions.push_back(std::move(fr));
  }
  report.timings.extraction_ms = ms_since(phase);

  // ---- backtrace ----
  phase = std::chrono::steady_clock::now();
  std::optional<std::ofstream> trace_log;
  if (!cfg.trace_log.empty()) trace_log.emplace(cfg.trace_log, std::ios::binary | std::ios::trunc);
  BacktraceOptions bopt;
  bopt.thresholds = cfg.thresholds;
  bopt.step_limit = cfg.step_limit;
  bopt.inline_config.max_depth = cfg.inline_depth;
  std::vector<CommitId> vics;
  for (std::size_t i = 0; i < report.functions.size(); ++i) {
    auto& fr = report.functions[i];
    if (fr.weighted.empty()) continue;
    const auto& fn = lp.extraction.functions[i];
    if (trace_log)
      bopt.on_step = [&](const CommitComparison& c) {
        *trace_log << comparison_to_json(c, fn.function_name).dump() << "\n";
      };
    try {
      fr.trace = backtrace_vic(*repo, fn, fr.weighted, bopt);
      if (fr.trace->vic) vics.push_back(*fr.trace->vic);
      if (fr.trace->terminated_reason == TerminationReason::StepLimit)
        report.degraded.push_back("detection: " + fn.function_name + ": step limit reached, partial trace");
    } catch (const Error& e) {
      fr.failures.push_back(std::string("detection: ") + e.code() + ": " + e.what());
    }
  }
  report.timings.detection_ms = ms_since(phase);

  std::size_t failed = 0;
  for (const auto& fr : report.functions)
    if (!fr.failures.empty()) ++failed;

  try {
    report.vic = earliest_commit(*repo, vics);
  } catch (const Error& e) {
    report.errors.push_back(std::string("detection: ") + e.what());
    return finish();
  }
  if (!report.vic) {
    report.errors.push_back("detection: no vulnerability-introducing commit found");
    return finish();
  }
  if (failed)
    report.degraded.push_back("detection: " + std::to_string(failed) + " of " +
                              std::to_string(report.functions.size()) + " functions failed");

  // ---- versions ----
  phase = std::chrono::steady_clock::now();
  try {
    std::optional<std::string> pc;
    if (!report.diff_mode) pc = report.patch_commit;
    report.verdict = delineate(*repo, report.vic->id, pc, cfg.cve.cve_id);
    report.ranges = vulnerable_ranges(*report.verdict, repo->tags());
  } catch (const Error& e) {
    report.errors.push_back(std::string("delineation: ") + e.code() + ": " + e.what());
  }
  report.timings.delineation_ms = ms_since(phase);
  return finish();
}

}  // namespace vtrace
