// Writes randomized analysis reports (plus two real ones) as JSON files so
// the schema can be checked from Python.
//
//   report_samples <out-dir> [count]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "scenarios.hpp"
#include "vtrace/pipeline.hpp"
#include "vtrace/report.hpp"

namespace fs = std::filesystem;
using namespace vtrace;

namespace {

class Random {
 public:
  explicit Random(unsigned seed) : rng_(seed) {}
  int between(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  bool coin() { return between(0, 1) == 1; }
  std::string text() {
    static const char* words[] = {"len", "memcpy(dst, src, n);", "if (n > 4)", "free(p);", "x | y", "\"quoted\"",
                                  "tab\there", "ünïcode", "", "back\\slash", "a\nb"};
    std::string out;
    for (int i = between(0, 3); i > 0; --i) out += words[between(0, 10)];
    return out;
  }
  std::string hex() {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < 40; ++i) out += digits[between(0, 15)];
    return out;
  }
  CommitId commit() { return {hex(), 1600000000 + between(0, 100000), {}}; }

 private:
  std::mt19937 rng_;
};

AnalysisReport random_report(Random& r) {
  AnalysisReport rep;
  rep.config.cve.cve_id = r.coin() ? "CVE-20" + std::to_string(r.between(10, 99)) + "-" + std::to_string(r.between(1000, 99999)) : "";
  rep.config.cve.cwe_id = r.coin() ? "CWE-" + std::to_string(r.between(1, 999)) : "";
  rep.config.cve.description = r.text();
  rep.config.thresholds.line = r.unit();
  rep.config.commit = r.hex();
  rep.patch_commit = r.hex();
  rep.diff_mode = r.coin();
  if (r.coin()) rep.shape = static_cast<PatchShape>(r.between(0, 2));
  for (int i = r.between(0, 2); i > 0; --i)
    rep.skipped.push_back({"ChangeLog", static_cast<ChangeKind>(r.between(0, 2)), r.between(1, 500), r.text(), r.text()});

  for (int f = r.between(0, 3); f > 0; --f) {
    FunctionReport fr;
    fr.function_name = "fn_" + std::to_string(r.between(0, 99));
    fr.file_path = "src/f" + std::to_string(f) + ".c";
    if (r.coin()) {
      DangerousFlow flow;
      flow.commit = r.hex();
      flow.sliced_post_image = r.coin();
      for (int i = 0; i < r.between(1, 6); ++i) {
        FlowRow row;
        row.row = 10 + i;
        row.kind = static_cast<RowKind>(r.between(0, 2));
        if (row.kind != RowKind::Added) row.old_line = row.row;
        if (row.kind != RowKind::Deleted) row.new_line = row.row + 1;
        row.text = r.text();
        flow.rows.push_back(row);
        flow.statements.push_back({row.row, row.kind, row.text, static_cast<FlowOrigin>(r.between(0, 3))});
      }
      fr.flow = flow;
    }
    if (r.coin()) {
      RefineResult rr;
      rr.degraded = r.coin();
      rr.attempts = r.between(1, 3);
      rr.statements.logic_summary = r.text();
      if (r.coin()) rr.warnings.push_back(r.text());
      fr.refined = rr;
      for (int i = r.between(0, 4); i > 0; --i) {
        WeightedStatement w{r.between(1, 900), r.text(), r.coin() ? 2.0 : 1.0, std::nullopt};
        if (w.weight > 1.5) w.sensitive_callee = "memcpy";
        fr.weighted.push_back(w);
        if (r.coin()) fr.weighted_rows.push_back(r.between(1, 900));
      }
    }
    if (r.coin()) {
      HistoryTrace t;
      t.terminated_reason = static_cast<TerminationReason>(r.between(0, 2));
      if (r.coin()) t.vic = r.commit();
      for (int i = r.between(0, 3); i > 0; --i) {
        CommitComparison c;
        c.commit = r.commit();
        c.file_path = fr.file_path;
        c.similarity_score = r.unit();
        StatementMatch m;
        m.matched = r.coin();
        c.per_statement.push_back(m);
        t.steps.push_back(c);
      }
      if (r.coin()) t.warnings.push_back(r.text());
      fr.trace = t;
    }
    if (r.coin()) fr.failures.push_back("detection: " + r.text());
    rep.functions.push_back(std::move(fr));
  }
  if (r.coin()) rep.vic = r.commit();
  if (r.coin()) {
    VersionVerdict v;
    v.cve_id = rep.config.cve.cve_id;
    v.vic = r.commit();
    if (r.coin()) v.pc = r.commit();
    for (int i = r.between(0, 4); i > 0; --i) {
      TagRef t{"v" + std::to_string(i), r.hex()};
      v.tags_from_vic.push_back(t);
      (r.coin() ? v.tags_from_pc : v.vulnerable).push_back(t);
    }
    if (!v.vulnerable.empty()) rep.ranges.push_back("[" + v.vulnerable.front().name + ", last]");
    if (r.coin()) v.warnings.push_back(r.text());
    rep.verdict = v;
  }
  if (r.coin()) rep.degraded.push_back("extraction: " + r.text());
  if (r.between(0, 3) == 0) rep.errors.push_back("delineation: " + r.text());
  rep.timings = {r.unit() * 100, r.unit() * 100, r.unit(), r.unit() * 300};
  return rep;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: report_samples <out-dir> [count]\n";
    return 1;
  }
  const fs::path dir = argv[1];
  const int count = argc > 2 ? std::stoi(argv[2]) : 100;
  fs::create_directories(dir);
  Random r(12345);
  for (int i = 0; i < count; ++i) {
    auto rep = random_report(r);
    std::ofstream(dir / ("random-" + std::to_string(i) + ".json")) << render_report(rep, OutputFormat::Json, i % 2 == 0);
  }
  // Real pipeline output, one full and one failing early.
  auto s = fixtures::make_scenario("refactor-between");
  auto cfg = fixtures::scenario_config(s, fixtures::write_faithful_stub(s, (dir / "stubs").string()));
  std::ofstream(dir / "real-ok.json") << render_report(run_pipeline(cfg), OutputFormat::Json, true);
  cfg.commit = s.repo->id(1);
  std::ofstream(dir / "real-error.json") << render_report(run_pipeline(cfg), OutputFormat::Json, true);
  std::cout << "wrote " << count + 2 << " reports to " << dir.string() << "\n";
  return 0;
}
