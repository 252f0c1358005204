#include <gtest/gtest.h>

#include <numeric>

#include "vtrace/errors.hpp"
#include "vtrace/parser.hpp"
#include "vtrace/weighting.hpp"

using namespace vtrace;

namespace {

cfront::DefinitionSet wrappers() {
  cfront::DefinitionSet d;
  d.add_source(
      "int avio_read(AVIOContext *s, unsigned char *buf, int size)\n"
      "{\n"
      "    int len = read(s->fd, buf, size);\n"
      "    return len;\n"
      "}\n"
      "void *av_calloc(size_t nmemb, size_t size)\n"
      "{\n"
      "    return calloc(nmemb, size);\n"
      "}\n"
      "static int outer(int n)\n"
      "{\n"
      "    return av_calloc(n, 1) != 0;\n"
      "}\n");
  return d;
}

std::optional<std::string> detect(std::string_view stmt, const std::optional<std::string>& hint = std::nullopt,
                                  const WeightConfig& cfg = {}) {
  return detect_sensitive_calls(cfront::parse_statements(stmt), SensitiveFunctionTable::defaults(), wrappers(), hint,
                                cfg);
}

double total(const std::vector<WeightedStatement>& w) {
  return std::accumulate(w.begin(), w.end(), 0.0, [](double s, const WeightedStatement& x) { return s + x.weight; });
}

}  // namespace

TEST(SensitiveTable, DefaultsCarryTheKnownRows) {
  auto t = SensitiveFunctionTable::defaults();
  EXPECT_EQ(t.entries.size(), 7u);
  const auto& bo = t.entries.at("buffer_overflow");
  EXPECT_NE(std::find(bo.begin(), bo.end(), "memcpy"), bo.end());
  const auto& fs = t.entries.at("format_string");
  EXPECT_EQ(fs, (std::vector<std::string>{"sprintf", "printf", "scanf"}));
}

TEST(SensitiveTable, MergeAddsWithoutDuplicates) {
  auto t = SensitiveFunctionTable::defaults();
  t.merge(SensitiveFunctionTable::from_json(R"({"buffer_overflow": ["memcpy", "bcopy"], "custom": ["danger"]})"));
  const auto& bo = t.entries.at("buffer_overflow");
  EXPECT_EQ(std::count(bo.begin(), bo.end(), "memcpy"), 1);
  EXPECT_EQ(std::count(bo.begin(), bo.end(), "bcopy"), 1);
  EXPECT_EQ(t.entries.at("custom"), std::vector<std::string>{"danger"});
}

TEST(SensitiveTable, BadJsonIsAConfigError) {
  EXPECT_THROW(SensitiveFunctionTable::from_json("[1, 2]"), ConfigError);
}

TEST(CweHint, MapsKnownIds) {
  EXPECT_EQ(vulnerability_type_for_cwe("CWE-787"), "buffer_overflow");
  EXPECT_EQ(vulnerability_type_for_cwe("CWE-190"), std::string(kIntegerOverflow));
  EXPECT_FALSE(vulnerability_type_for_cwe("CWE-99999").has_value());
  EXPECT_FALSE(vulnerability_type_for_cwe("").has_value());
}

TEST(Detect, WrapperAroundRead) { EXPECT_EQ(detect("avio_read(pb, buf, n*len);"), "read"); }

TEST(Detect, WrapperAroundCalloc) { EXPECT_EQ(detect("mxf->local_tags = av_calloc(item_num, item_len);"), "calloc"); }

TEST(Detect, WrapperDepthIsOneLevel) {
  EXPECT_FALSE(detect("x = outer(3);").has_value());
  WeightConfig deeper;
  deeper.wrapper_depth = 2;
  EXPECT_EQ(detect("x = outer(3);", std::nullopt, deeper), "calloc");
}

TEST(Detect, PlainDeclarationIsNotSensitive) { EXPECT_FALSE(detect("int x = 3;").has_value()); }

TEST(Detect, DirectCall) { EXPECT_EQ(detect("memcpy(dst, src, n);"), "memcpy"); }

TEST(Detect, GatingModes) {
  const std::optional<std::string> uaf = "use_after_free";
  // memcpy is not in the use-after-free row.
  EXPECT_EQ(detect("memcpy(dst, src, n);", uaf), "memcpy");
  WeightConfig strict;
  strict.gating = GatingMode::GatedStrict;
  EXPECT_FALSE(detect("memcpy(dst, src, n);", uaf, strict).has_value());
  EXPECT_EQ(detect("free(p);", uaf, strict), "free");
}

TEST(Detect, OperatorPatternsNeedTheIntegerOverflowHint) {
  EXPECT_FALSE(detect("size = a * b;").has_value());
  EXPECT_TRUE(detect("size = a * b;", std::string(kIntegerOverflow)).has_value());
}

TEST(Weights, MemcpyIsWeightedHigh) {
  auto w = assign_weights({{7, "memcpy(dst, src, n);"}}, SensitiveFunctionTable::defaults(), {}, std::nullopt);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0].weight, 2.0);
  EXPECT_EQ(w[0].sensitive_callee, "memcpy");
  EXPECT_EQ(w[0].line, 7);
}

TEST(Weights, PlainAssignmentIsDefault) {
  auto w = assign_weights({{3, "x = y + 1;"}}, SensitiveFunctionTable::defaults(), {}, std::nullopt);
  EXPECT_DOUBLE_EQ(w.at(0).weight, 1.0);
  EXPECT_FALSE(w.at(0).sensitive_callee.has_value());
}

TEST(Weights, ThreeSensitiveStatementsTotalSix) {
  auto w = assign_weights({{1, "memcpy(a, b, n);"}, {2, "p = malloc(n);"}, {3, "free(p);"}},
                          SensitiveFunctionTable::defaults(), {}, std::nullopt);
  EXPECT_DOUBLE_EQ(total(w), 6.0);
}

TEST(Weights, WeightIffSensitiveCallee) {
  WeightConfig cfg;
  cfg.weight_v = 5.0;
  cfg.weight_d = 0.5;
  auto w = assign_weights({{1, "strcpy(a, b);"}, {2, "n++;"}, {3, "avio_read(pb, buf, n);"}},
                          SensitiveFunctionTable::defaults(), wrappers(), std::nullopt, cfg);
  for (const auto& s : w) EXPECT_EQ(s.weight == cfg.weight_v, s.sensitive_callee.has_value());
  EXPECT_DOUBLE_EQ(total(w), 10.5);
}

TEST(Gating, StringRoundTrip) {
  for (auto m : {GatingMode::GatedWithFallback, GatingMode::GatedStrict, GatingMode::Ungated})
    EXPECT_EQ(gating_mode_from_string(to_string(m)), m);
  EXPECT_THROW(gating_mode_from_string("sometimes"), ConfigError);
}
