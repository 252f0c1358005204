#include <gtest/gtest.h>

#include "fixture_repo.hpp"
#include "scenarios.hpp"
#include "vtrace/backtrace.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/patch.hpp"
#include "vtrace/repo.hpp"
#include "vtrace/slicer.hpp"
#include "vtrace/weighting.hpp"

using namespace vtrace;
using namespace vtrace::fixtures;

namespace {

struct Traced {
  std::vector<HistoryTrace> traces;
};

// Vulnerable statements picked by the scenario's markers, weighted with the default table, one
// trace per patched function.
Traced trace_scenario(const Scenario& s, const BacktraceOptions& opt = {}, double weight_scale = 1.0) {
  RepoOptions ro;
  if (auto it = s.extra_config.find("first_parent_only"); it != s.extra_config.end())
    ro.first_parent_only = it->second == "true";
  auto repo = Repository::open(s.repo->path(), ro);
  auto patch = load_patch(repo, s.patch_commit);
  auto ex = extract_patched_functions(repo, patch);
  Traced out;
  for (const auto& fn : ex.functions) {
    auto flow = extract_dangerous_flow(fn);
    std::vector<StatementText> sv;
    for (const auto& st : flow.statements) {
      if (st.kind == RowKind::Added) continue;
      for (const auto& m : s.sv_markers) {
        const bool deleted_only = m[0] == '-';
        const std::string needle = deleted_only ? m.substr(1) : m;
        if (deleted_only && st.kind != RowKind::Deleted) continue;
        if (st.text.find(needle) != std::string::npos) {
          sv.push_back({*flow.row(st.row)->old_line, st.text});
          break;
        }
      }
    }
    if (sv.empty()) continue;
    WeightConfig wc;
    wc.weight_d *= weight_scale;
    wc.weight_v *= weight_scale;
    auto weighted = assign_weights(sv, SensitiveFunctionTable::defaults(), {}, std::nullopt, wc);
    out.traces.push_back(backtrace_vic(repo, fn, weighted, opt));
  }
  return out;
}

}  // namespace

TEST(Backtrace, RefactorBetweenIsPassedThrough) {
  auto s = make_scenario("refactor-between");
  auto t = trace_scenario(s);
  ASSERT_EQ(t.traces.size(), 1u);
  const auto& trace = t.traces[0];
  ASSERT_TRUE(trace.vic);
  EXPECT_EQ(trace.vic->id, s.expected_vic);
  EXPECT_EQ(trace.terminated_reason, TerminationReason::ScoreBelowThreshold);
  ASSERT_GE(trace.steps.size(), 2u);
  // The FFMIN refactor comes first (newest) and keeps the statements alive.
  EXPECT_NE(trace.steps.front().commit.id, s.expected_vic);
  EXPECT_GE(trace.steps.front().similarity_score, Thresholds{}.score);
  EXPECT_LT(trace.steps.back().similarity_score, Thresholds{}.score);
  EXPECT_EQ(trace.steps.back().commit.id, s.expected_vic);
}

TEST(Backtrace, InitialCommitOriginExhaustsHistory) {
  auto s = make_scenario("initial-commit-origin");
  auto t = trace_scenario(s);
  ASSERT_EQ(t.traces.size(), 1u);
  ASSERT_TRUE(t.traces[0].vic);
  EXPECT_EQ(t.traces[0].vic->id, s.expected_vic);
  EXPECT_TRUE(t.traces[0].vic->is_root());
  EXPECT_EQ(t.traces[0].terminated_reason, TerminationReason::HistoryExhausted);
}

TEST(Backtrace, GuardInsertionFindsTheDangerousCall) {
  auto s = make_scenario("insertion-only");
  auto t = trace_scenario(s);
  ASSERT_EQ(t.traces.size(), 1u);
  ASSERT_TRUE(t.traces[0].vic);
  EXPECT_EQ(t.traces[0].vic->id, s.expected_vic);
}

TEST(Backtrace, StepLimitGivesPartialTrace) {
  auto s = long_history_scenario(120);
  BacktraceOptions opt;
  opt.step_limit = 3;
  auto t = trace_scenario(s, opt);
  ASSERT_EQ(t.traces.size(), 1u);
  EXPECT_EQ(t.traces[0].terminated_reason, TerminationReason::StepLimit);
  EXPECT_EQ(t.traces[0].steps.size(), 3u);
  EXPECT_FALSE(t.traces[0].vic.has_value());
}

TEST(Backtrace, ScoresStayInRangeAndAreDeterministic) {
  auto s = make_scenario("header-macro-refactor");
  auto a = trace_scenario(s);
  auto b = trace_scenario(s);
  ASSERT_EQ(a.traces.size(), b.traces.size());
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    ASSERT_EQ(a.traces[i].steps.size(), b.traces[i].steps.size());
    for (std::size_t k = 0; k < a.traces[i].steps.size(); ++k) {
      const auto& x = a.traces[i].steps[k];
      EXPECT_EQ(x.commit.id, b.traces[i].steps[k].commit.id);
      EXPECT_DOUBLE_EQ(x.similarity_score, b.traces[i].steps[k].similarity_score);
      EXPECT_GE(x.similarity_score, 0.0);
      EXPECT_LE(x.similarity_score, 1.0);
      bool all = true, none = true;
      for (const auto& m : x.per_statement) (m.matched ? none : all) = false;
      EXPECT_EQ(x.similarity_score == 1.0, all);
      EXPECT_EQ(x.similarity_score == 0.0, none);
    }
  }
}

TEST(Backtrace, WeightScaleDoesNotChangeScores) {
  auto s = make_scenario("linear");
  auto base = trace_scenario(s);
  auto scaled = trace_scenario(s, {}, 3.5);
  ASSERT_EQ(base.traces.size(), scaled.traces.size());
  for (std::size_t i = 0; i < base.traces.size(); ++i) {
    ASSERT_EQ(base.traces[i].steps.size(), scaled.traces[i].steps.size());
    for (std::size_t k = 0; k < base.traces[i].steps.size(); ++k)
      EXPECT_NEAR(base.traces[i].steps[k].similarity_score, scaled.traces[i].steps[k].similarity_score, 1e-12);
  }
}

TEST(Backtrace, StricterThresholdsNeverRaiseTheScore) {
  auto s = make_scenario("refactor-between");
  auto loose = trace_scenario(s);
  BacktraceOptions strict;
  strict.thresholds.line = 0.99;
  strict.thresholds.ast = 0.99;
  strict.step_limit = 1;
  auto tight = trace_scenario(s, strict);
  ASSERT_FALSE(loose.traces.at(0).steps.empty());
  ASSERT_FALSE(tight.traces.at(0).steps.empty());
  EXPECT_LE(tight.traces[0].steps[0].similarity_score, loose.traces[0].steps[0].similarity_score);
}

TEST(Backtrace, DirectStatementsOnASmallRepo) {
  FixtureRepo r("backtrace-direct");
  int c1 = r.commit("init", {write("a.c", lines({"void f(char *d, char *s)", "{", "  strcpy(d, s);", "}"}))});
  int c2 = r.commit("comment", {write("a.c", lines({"/* copy */", "void f(char *d, char *s)", "{", "  strcpy(d, s);", "}"}))});
  r.build();
  auto repo = Repository::open(r.path());
  auto trace = backtrace_vic(repo, r.id(c2), "a.c", "f", {{4, "  strcpy(d, s);", 2.0, true}});
  ASSERT_TRUE(trace.vic);
  EXPECT_EQ(trace.vic->id, r.id(c1));
  EXPECT_EQ(trace.function_name, "f");
}

TEST(Backtrace, DefinitionsIncludeQuotedHeaders) {
  auto s = make_scenario("refactor-between");
  auto repo = Repository::open(s.repo->path());
  auto defs = definitions_at(repo, s.patch_commit, "demux/tag.c");
  EXPECT_NE(defs.macro("FFMIN"), nullptr);
}

TEST(Backtrace, EarliestCommitPrefersAncestors) {
  auto s = make_scenario("linear");
  auto repo = Repository::open(s.repo->path());
  auto head = repo.head();
  auto vic = repo.resolve(s.expected_vic);
  EXPECT_EQ(earliest_commit(repo, {head, vic})->id, vic.id);
  EXPECT_EQ(earliest_commit(repo, {vic, head})->id, vic.id);
  EXPECT_FALSE(earliest_commit(repo, {}).has_value());
}
