#include <gtest/gtest.h>

#include <algorithm>

#include "scenarios.hpp"
#include "vtrace/cfront.hpp"
#include "vtrace/patch.hpp"
#include "vtrace/slicer.hpp"

using namespace vtrace;

namespace {

DependenceGraph pdg_of(std::string_view function_source) {
  return build_pdg(cfront::parse_function_source(function_source));
}

bool has_data_edge(const DependenceGraph& g, int from, int to, const std::string& var) {
  return std::find(g.data_edges.begin(), g.data_edges.end(), DataEdge{from, to, var}) != g.data_edges.end();
}

PatchedFunction patched(const std::string& pre, const std::string& post, const std::string& diff) {
  auto ex = extract_patched_functions(
      parse_unified_diff(diff), [&](const std::string&) { return std::optional<std::string>(pre); },
      [&](const std::string&) { return std::optional<std::string>(post); });
  EXPECT_EQ(ex.functions.size(), 1u);
  return ex.functions.at(0);
}

PatchedFunction primer_pack() {
  return patched(fixtures::primer_pack_pre_source(), fixtures::primer_pack_post_source(), fixtures::primer_pack_diff());
}

}  // namespace

TEST(Pdg, AssignmentFeedsLaterUse) {
  auto g = pdg_of("void f(void)\n{\n  int x = 1;\n  int y = x;\n}\n");
  EXPECT_TRUE(has_data_edge(g, 3, 4, "x"));
  EXPECT_EQ(g.statements.at(3).kind, StatementKind::Assignment);
}

TEST(Pdg, StrongDefinitionKillsEarlierOne) {
  auto g = pdg_of("void f(void)\n{\n  int x = 1;\n  x = 2;\n  use(x);\n}\n");
  EXPECT_TRUE(has_data_edge(g, 4, 5, "x"));
  EXPECT_FALSE(has_data_edge(g, 3, 5, "x"));
}

TEST(Pdg, PrimerPackEdges) {
  auto g = pdg_of(fixtures::primer_pack_pre_source());
  EXPECT_TRUE(has_data_edge(g, 9, 15, "item_num"));
  EXPECT_TRUE(has_data_edge(g, 9, 16, "item_num"));
  EXPECT_TRUE(g.statements.at(15).is_guard);
  EXPECT_EQ(g.statements.at(16).structural_parent, 15);
  EXPECT_EQ(g.statements.at(17).structural_parent, 15);
  // Statements after the guard are controlled by it.
  EXPECT_EQ(g.statements.at(19).guard_parent, 15);
  EXPECT_EQ(g.statements.at(15).guard_parent, 11);
}

TEST(Slice, PrimerPackBackward) {
  auto g = pdg_of(fixtures::primer_pack_pre_source());
  auto back = backward_slice(g, {{15}, {"item_num"}});
  back.erase(15);
  EXPECT_EQ(back, (std::set<int>{9, 11}));
}

TEST(Flow, PrimerPackRowsByOrigin) {
  auto flow = extract_dangerous_flow(primer_pack());
  EXPECT_EQ(flow.rows_with(FlowOrigin::Seed), (std::set<int>{15, 16}));
  EXPECT_EQ(flow.rows_with(FlowOrigin::Backward), (std::set<int>{9, 11}));
  auto fwd = flow.rows_with(FlowOrigin::ForwardData);
  for (int r : flow.rows_with(FlowOrigin::ForwardControl)) fwd.insert(r);
  EXPECT_EQ(fwd, (std::set<int>{17, 18, 24, 25, 26, 27, 28}));
  EXPECT_EQ(flow.row_numbers(), (std::set<int>{9, 11, 15, 16, 17, 18, 24, 25, 26, 27, 28}));
}

TEST(Flow, PrimerPackMergedRows) {
  auto flow = extract_dangerous_flow(primer_pack());
  ASSERT_NE(flow.row(15), nullptr);
  EXPECT_EQ(flow.row(15)->kind, RowKind::Deleted);
  EXPECT_EQ(flow.row(16)->kind, RowKind::Added);
  EXPECT_EQ(flow.row(16)->new_line, 15);
  EXPECT_EQ(flow.row(17)->old_line, 16);
  EXPECT_EQ(flow.row(17)->new_line, 16);
}

TEST(Flow, ReturnInsideGuardDoesNotPropagate) {
  // Row 18 returns; nothing it defines reaches later rows, so rows like
  // 20 (the unrelated verbose log) stay out.
  auto flow = extract_dangerous_flow(primer_pack());
  EXPECT_TRUE(flow.row_numbers().count(18));
  EXPECT_FALSE(flow.row_numbers().count(20));
  EXPECT_FALSE(flow.row_numbers().count(21));
}

TEST(Flow, BackwardOnlyDirection) {
  auto flow = extract_dangerous_flow(primer_pack(), SliceDirection::BackwardOnly);
  EXPECT_EQ(flow.row_numbers(), (std::set<int>{9, 11, 15, 16}));
  EXPECT_EQ(extract_dangerous_flow(primer_pack(), false).row_numbers(), flow.row_numbers());
}

TEST(Slice, ParameterSeedKeepsOnlyGoverningConditions) {
  auto g = pdg_of("int f(int n)\n{\n  if (n > 4)\n    use(n);\n  return 0;\n}\n");
  EXPECT_EQ(backward_slice(g, {{4}, {"n"}}), (std::set<int>{3}));
}

TEST(Slice, ParameterReadsFollowForward) {
  auto g = pdg_of("int f(int n)\n{\n  check(n);\n  other();\n  return n;\n}\n");
  EXPECT_EQ(forward_slice(g, {{3}, {"n"}}), (std::set<int>{5}));
}

TEST(Slice, TransitiveChain) {
  auto g = pdg_of("void f(void)\n{\n  int x = src();\n  int y = x;\n  int z = y;\n  sink(z);\n}\n");
  EXPECT_EQ(forward_slice(g, {{3}, {"x"}}), (std::set<int>{4, 5, 6}));
  auto back = backward_slice(g, {{6}, {"z"}});
  EXPECT_TRUE(back.count(3) && back.count(4) && back.count(5));
}

TEST(Slice, UnreadSeedHasEmptyForwardSlice) {
  auto g = pdg_of("void f(void)\n{\n  int unused = 5;\n  other();\n}\n");
  EXPECT_TRUE(forward_slice(g, {{3}, {"unused"}}).empty());
}

TEST(Flow, DeadStatementPatchIsSeedOnly) {
  const std::string pre = "void f(void)\n{\n  int t = 1;\n  other();\n}\n";
  const std::string post = "void f(void)\n{\n  int t = 2;\n  other();\n}\n";
  const std::string diff =
      "--- a/x.c\n+++ b/x.c\n@@ -3,1 +3,1 @@\n-  int t = 1;\n+  int t = 2;\n";
  auto flow = extract_dangerous_flow(patched(pre, post, diff));
  EXPECT_EQ(flow.row_numbers(), (std::set<int>{3, 4}));
  EXPECT_EQ(flow.rows_with(FlowOrigin::Seed), (std::set<int>{3, 4}));
}

TEST(Flow, InsertionOnlyGuardSlicesThePostImage) {
  const std::string pre = "int g(char *p, int n)\n{\n  memcpy(p, buf, n);\n  return n;\n}\n";
  const std::string post = "int g(char *p, int n)\n{\n  if (n < 0)\n    return -1;\n  memcpy(p, buf, n);\n  return n;\n}\n";
  const std::string diff =
      "--- a/x.c\n+++ b/x.c\n@@ -2,0 +3,2 @@\n+  if (n < 0)\n+    return -1;\n";
  auto flow = extract_dangerous_flow(patched(pre, post, diff));
  EXPECT_TRUE(flow.sliced_post_image);
  auto rows = flow.row_numbers();
  EXPECT_TRUE(rows.count(3) && rows.count(4));
  EXPECT_TRUE(rows.count(5)) << "memcpy is guarded by the new check";
  for (int r : rows) EXPECT_NE(flow.row(r)->kind, RowKind::Deleted);
}
