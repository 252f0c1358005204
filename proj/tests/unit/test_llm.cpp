#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "scenarios.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/llm.hpp"
#include "vtrace/patch.hpp"

using namespace vtrace;
namespace fs = std::filesystem;

namespace {

DangerousFlow primer_pack_flow() {
  const std::string pre = fixtures::primer_pack_pre_source(), post = fixtures::primer_pack_post_source();
  auto ex = extract_patched_functions(
      parse_unified_diff(fixtures::primer_pack_diff()), [&](const std::string&) { return std::optional<std::string>(pre); },
      [&](const std::string&) { return std::optional<std::string>(post); });
  return extract_dangerous_flow(ex.functions.at(0));
}

const CveContext kPrimerPackCve{"CVE-2020-14212", "CWE-787", "out-of-bounds write in mxf_read_primer_pack"};

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("vtrace-llm-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string completion(const std::string& content, const std::string& finish = "stop") {
  nlohmann::json j;
  j["choices"] = nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", content}}}, {"finish_reason", finish}}});
  return j.dump();
}

// Replays a fixed list of responses and records what it was sent.
class ScriptedTransport : public HttpTransport {
 public:
  explicit ScriptedTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>&) override {
    urls.push_back(url);
    bodies.push_back(body);
    if (next_ >= script_.size()) return {500, "script exhausted"};
    return script_[next_++];
  }
  std::vector<std::string> urls, bodies;

 private:
  std::vector<HttpResponse> script_;
  std::size_t next_ = 0;
};

BackendSettings fast_settings(const std::string& base = "http://model.invalid/v1") {
  BackendSettings s;
  s.base_url = base;
  s.model = "test-model";
  s.backoff = std::chrono::milliseconds(1);
  return s;
}

const std::string kFaithful =
    "vulnerability logic: a negative item_num passes the size check and reaches av_calloc and avio_read\n"
    "vulnerable lines : [15, 24, 28]";

}  // namespace

TEST(Prompt, FewShotCotHasExemplarsThenTargetAndReasoning) {
  auto flow = primer_pack_flow();
  auto b = build_prompt(kPrimerPackCve, flow, PromptStrategy::FewShotCot);
  EXPECT_EQ(b.system_text.rfind("You are a security researcher, expert in detecting security vulnerabilities", 0), 0u);
  EXPECT_EQ(b.exemplars.size(), 2u);
  const auto target = b.user_text.find("CVE-2020-14212");
  ASSERT_NE(target, std::string::npos);
  for (const auto& e : b.exemplars) {
    const auto at = b.user_text.find(e.cve_id);
    ASSERT_NE(at, std::string::npos);
    EXPECT_LT(at, target);
  }
  EXPECT_NE(b.user_text.find(kReasoningInstruction), std::string::npos);
  EXPECT_EQ(occurrences(b.system_text + b.user_text, kResponseFormat), 1u);
}

TEST(Prompt, ZeroShotHasOnlyTheTarget) {
  auto b = build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::ZeroShot);
  EXPECT_TRUE(b.exemplars.empty());
  EXPECT_EQ(b.user_text.find(kReasoningInstruction), std::string::npos);
  for (const auto& e : ExemplarLibrary::builtin().defaults) EXPECT_EQ(b.user_text.find(e.cve_id), std::string::npos);
  EXPECT_NE(b.user_text.find("CVE-2020-14212"), std::string::npos);
}

TEST(Prompt, FewShotWithoutReasoning) {
  auto b = build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::FewShot);
  EXPECT_EQ(b.exemplars.size(), 2u);
  EXPECT_EQ(b.user_text.find(kReasoningInstruction), std::string::npos);
}

TEST(Prompt, FlowRenderingMarksDeletedAndAddedRows) {
  const auto text = render_flow(primer_pack_flow());
  EXPECT_NE(text.find("15 -     if (item_num > 65536) {"), std::string::npos);
  EXPECT_NE(text.find("16 +     if (item_num > 65536 || item_num < 0) {"), std::string::npos);
  EXPECT_NE(text.find("9       int item_num = avio_rb32(pb);"), std::string::npos);
}

TEST(Prompt, EmptyContextMatchesGolden) {
  auto b = build_prompt(CveContext{}, primer_pack_flow(), PromptStrategy::FewShotCot);
  const std::string got = "=== system ===\n" + b.system_text + "\n=== user ===\n" + b.user_text;
  const fs::path golden = fs::path(VTRACE_GOLDEN_DIR) / "prompt_empty_context.txt";
  if (std::getenv("VTRACE_UPDATE_GOLDEN")) std::ofstream(golden, std::ios::binary) << got;
  EXPECT_EQ(got, read_file(golden));
  EXPECT_GE(occurrences(b.user_text, "unknown"), 3u);
}

TEST(Prompt, AssemblyIsPure) {
  auto flow = primer_pack_flow();
  auto a = build_prompt(kPrimerPackCve, flow, PromptStrategy::FewShotCot);
  auto b = build_prompt(kPrimerPackCve, flow, PromptStrategy::FewShotCot);
  EXPECT_EQ(a.system_text, b.system_text);
  EXPECT_EQ(a.user_text, b.user_text);
  EXPECT_EQ(a.digest(), b.digest());
  auto c = build_prompt(kPrimerPackCve, flow, PromptStrategy::ZeroShot);
  EXPECT_NE(a.digest(), c.digest());
}

TEST(Prompt, EmptyFlowIsRejected) {
  EXPECT_THROW(build_prompt(kPrimerPackCve, DangerousFlow{}, PromptStrategy::ZeroShot), PreconditionViolation);
}

TEST(Prompt, StrategyNames) {
  for (auto s : {PromptStrategy::ZeroShot, PromptStrategy::FewShot, PromptStrategy::FewShotCot})
    EXPECT_EQ(prompt_strategy_from_string(to_string(s)), s);
  EXPECT_THROW(prompt_strategy_from_string("many_shot"), ConfigError);
}

TEST(Parse, ExtractsLogicAndLines) {
  auto r = parse_response("vulnerability logic: unchecked item_num reaches allocation\nvulnerable lines : [15, 24, 28]",
                          primer_pack_flow());
  EXPECT_EQ(r.vulnerability_logic, "unchecked item_num reaches allocation");
  EXPECT_EQ(r.vulnerable_lines, (std::set<int>{15, 24, 28}));
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Parse, DropsLinesOutsideTheFlowAndAddedRows) {
  auto r = parse_response("vulnerability logic: x\nvulnerable lines : [15, 16, 20, 24, 999]", primer_pack_flow());
  EXPECT_EQ(r.vulnerable_lines, (std::set<int>{15, 24}));
  EXPECT_EQ(r.warnings.size(), 3u);
}

TEST(Parse, ProseIsUnparseable) {
  EXPECT_THROW(parse_response("I think the bug is in the size check.", primer_pack_flow()), UnparseableResponse);
}

TEST(Stub, ReturnsCannedTextWithoutNetwork) {
  StubBackend stub(std::map<std::string, std::string>{{"CVE-2020-14212", kFaithful}});
  auto b = build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::ZeroShot);
  EXPECT_EQ(query_model(b, stub), kFaithful);
  EXPECT_EQ(stub.calls(), 1);
  b.cve_id = "CVE-1999-0001";
  EXPECT_EQ(query_model(b, stub), "");
}

TEST(Stub, FromJsonRejectsNonObjects) {
  EXPECT_THROW(StubBackend::from_json("[]"), ConfigError);
  EXPECT_EQ(StubBackend::from_json(R"({"CVE-1": "x"})")->name(), "stub");
}

TEST(Chat, RequestCarriesDeterministicDefaults) {
  ChatCompletionBackend backend(fast_settings());
  auto b = build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::ZeroShot);
  auto j = nlohmann::json::parse(backend.request_body(b));
  EXPECT_EQ(j.at("temperature"), 0.0);
  EXPECT_EQ(j.at("max_tokens"), 1024);
  EXPECT_EQ(j.at("model"), "test-model");
  ASSERT_EQ(j.at("messages").size(), 2u);
  EXPECT_EQ(j["messages"][0]["role"], "system");
  EXPECT_EQ(j["messages"][1]["content"], b.user_text);
}

TEST(Chat, RetriesTwiceThenSucceeds) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{503, "busy"}, {0, "refused"}, {200, completion("ok")}});
  ChatCompletionBackend backend(fast_settings(), t);
  std::vector<std::chrono::milliseconds> slept;
  backend.sleep = [&](std::chrono::milliseconds d) { slept.push_back(d); };
  auto b = build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::ZeroShot);
  EXPECT_EQ(backend.complete(b), "ok");
  EXPECT_EQ(t->bodies.size(), 3u);
  EXPECT_EQ(t->urls.at(0), "http://model.invalid/v1/chat/completions");
  ASSERT_EQ(slept.size(), 2u);
  EXPECT_EQ(slept[1], 2 * slept[0]);
}

TEST(Chat, GivesUpAfterBoundedRetries) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{});
  ChatCompletionBackend backend(fast_settings(), t);
  backend.sleep = [](std::chrono::milliseconds) {};
  EXPECT_THROW(backend.complete(build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::ZeroShot)), BackendUnavailable);
  EXPECT_EQ(t->bodies.size(), 4u);
}

TEST(Chat, ClientErrorsAreNotRetried) {
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{401, "bad key"}});
  ChatCompletionBackend backend(fast_settings(), t);
  backend.sleep = [](std::chrono::milliseconds) {};
  EXPECT_THROW(backend.complete(build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::ZeroShot)), BackendUnavailable);
  EXPECT_EQ(t->bodies.size(), 1u);
}

TEST(Chat, TokenLimitIsDistinct) {
  auto b = build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::ZeroShot);
  auto truncated = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{200, completion("vulnerab", "length")}});
  ChatCompletionBackend a(fast_settings(), truncated);
  EXPECT_THROW(a.complete(b), TokenLimit);
  auto overflow = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{400, R"({"error": {"code": "context_length_exceeded"}})"}});
  ChatCompletionBackend c(fast_settings(), overflow);
  EXPECT_THROW(c.complete(b), TokenLimit);
}

TEST(Cache, SecondIdenticalBundleIsServedFromDisk) {
  const auto dir = temp_dir("cache");
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{200, completion(kFaithful)}});
  auto inner = std::make_shared<ChatCompletionBackend>(fast_settings(), t);
  CachedBackend cached(inner, dir.string(), "test-model");
  auto b = build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::FewShotCot);
  const auto first = query_model(b, cached);
  const auto second = query_model(b, cached);
  EXPECT_EQ(first, kFaithful);
  EXPECT_EQ(second, first);
  EXPECT_EQ(t->bodies.size(), 1u);
  EXPECT_EQ(cached.hits(), 1);
  EXPECT_EQ(cached.misses(), 1);
  auto entry = nlohmann::json::parse(read_file(cached.cache_path(b)));
  EXPECT_EQ(entry.at("raw_response"), kFaithful);
  EXPECT_TRUE(entry.contains("request_digest"));
  EXPECT_TRUE(entry.contains("timestamp"));

  // A fresh cache object with no backend at all still answers.
  CachedBackend offline(nullptr, dir.string(), "test-model");
  EXPECT_EQ(query_model(b, offline), kFaithful);
  auto other = build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::ZeroShot);
  EXPECT_THROW(query_model(other, offline), BackendUnavailable);
  fs::remove_all(dir);
}

TEST(Chat, TalksToALocalServer) {
  httplib::Server server;
  std::string seen_auth, seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(completion(kFaithful), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto settings = fast_settings("http://127.0.0.1:" + std::to_string(port) + "/v1/");
  settings.api_key = "secret-token";
  ChatCompletionBackend backend(settings, std::make_shared<HttplibTransport>(std::chrono::seconds(10)));
  auto b = build_prompt(kPrimerPackCve, primer_pack_flow(), PromptStrategy::ZeroShot);
  const auto text = backend.complete(b);
  server.stop();
  th.join();

  EXPECT_EQ(text, kFaithful);
  EXPECT_EQ(seen_auth, "Bearer secret-token");
  EXPECT_EQ(nlohmann::json::parse(seen_body).at("messages").at(0).at("content"), b.system_text);
}

TEST(Refine, FaithfulAnswerOnPrimerPack) {
  StubBackend stub(std::map<std::string, std::string>{
      {"CVE-2020-14212", "vulnerability logic: negative item_num bypasses the bound\nvulnerable lines : [15, 16, 24, 28]"}});
  auto flow = primer_pack_flow();
  auto r = refine(kPrimerPackCve, flow, stub);
  EXPECT_FALSE(r.degraded);
  const auto rows = r.statements.rows();
  for (int want : {15, 24, 28}) EXPECT_TRUE(rows.count(want)) << want;
  EXPECT_FALSE(rows.count(17));
  EXPECT_FALSE(rows.count(16)) << "added rows never become vulnerable statements";
  for (int row : rows) EXPECT_TRUE(flow.row_numbers().count(row));
  EXPECT_EQ(r.statements.logic_summary, "negative item_num bypasses the bound");
}

TEST(Refine, UnparseableAnswersDegradeToTheWholeFlow) {
  StubBackend stub(std::map<std::string, std::string>{{"CVE-2020-14212", "no idea"}});
  auto flow = primer_pack_flow();
  auto r = refine(kPrimerPackCve, flow, stub);
  EXPECT_TRUE(r.degraded);
  EXPECT_EQ(r.attempts, 3);
  EXPECT_EQ(stub.calls(), 3);
  std::set<int> non_added;
  for (const auto& s : flow.statements)
    if (s.kind != RowKind::Added) non_added.insert(s.row);
  EXPECT_EQ(r.statements.rows(), non_added);
}

TEST(Refine, EmptyFlowIsAPreconditionViolation) {
  StubBackend stub(std::map<std::string, std::string>{});
  EXPECT_THROW(refine(kPrimerPackCve, DangerousFlow{}, stub), PreconditionViolation);
}

TEST(Exemplars, BuiltinLibraryHasTwoDefaults) {
  auto lib = ExemplarLibrary::builtin();
  EXPECT_EQ(lib.defaults.size(), 2u);
  EXPECT_EQ(lib.for_cwe("CWE-999").size(), 2u);
  EXPECT_THROW(ExemplarLibrary::from_json("{}"), ConfigError);
}
