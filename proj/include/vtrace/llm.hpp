#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vtrace/slicer.hpp"

namespace vtrace {

struct CveContext {
  std::string cve_id;
  std::string cwe_id;
  std::string description;

  // True for an empty id or one shaped like CVE-YYYY-NNNN+.
  bool has_valid_id() const;
};

enum class PromptStrategy { ZeroShot, FewShot, FewShotCot };

std::string_view to_string(PromptStrategy s);
PromptStrategy prompt_strategy_from_string(std::string_view s);  // throws ConfigError

struct Exemplar {
  std::string cve_id;
  std::string cwe_id;
  std::string description;
  std::string flow;  // rendered dangerous flow
  std::string logic;
  std::vector<int> lines;
};

// The shipped exemplar pair, plus optional per-type overrides keyed by the
// weighting table's row names.
struct ExemplarLibrary {
  std::vector<Exemplar> defaults;
  std::map<std::string, std::vector<Exemplar>> by_type;

  static ExemplarLibrary builtin();
  static ExemplarLibrary from_json(std::string_view json_text);  // throws ConfigError

  const std::vector<Exemplar>& for_cwe(std::string_view cwe_id) const;
};

extern const char* const kSystemRole;
extern const char* const kReasoningInstruction;
extern const char* const kResponseFormat;

struct PromptBundle {
  std::string cve_id;  // lets offline backends key their answers
  std::string system_text;
  std::string user_text;
  std::vector<Exemplar> exemplars;
  std::string cot_instruction;

  // Hash of everything sent to the model.
  std::string digest() const;
};

// One line per flow statement: "<row> <marker> <code>", marker "-" for
// deleted lines, "+" for added lines, blank for context.
std::string render_flow(const DangerousFlow& flow);

// Throws PreconditionViolation when the flow has no statements.
PromptBundle build_prompt(const CveContext& ctx, const DangerousFlow& flow, PromptStrategy strategy,
                          const ExemplarLibrary& exemplars = ExemplarLibrary::builtin());

struct LlmResponse {
  std::string raw;
  std::string vulnerability_logic;
  std::set<int> vulnerable_lines;
  std::vector<std::string> warnings;
};

// Throws UnparseableResponse when no bracketed line list is present.
LlmResponse parse_response(std::string_view raw, const DangerousFlow& flow);

// ---- backends -------------------------------------------------------------

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string complete(const PromptBundle& bundle) = 0;
  virtual std::string name() const = 0;
};

// Offline backend: canned answers keyed by CVE id ("*" matches any). Unknown
// ids get an empty answer.
class StubBackend : public ModelBackend {
 public:
  explicit StubBackend(std::map<std::string, std::string> answers);
  static std::unique_ptr<StubBackend> from_json(std::string_view json_text);  // throws ConfigError
  static std::unique_ptr<StubBackend> from_file(const std::string& path);

  std::string complete(const PromptBundle& bundle) override;
  std::string name() const override { return "stub"; }
  int calls() const { return calls_; }

 private:
  std::map<std::string, std::string> answers_;
  std::atomic<int> calls_{0};
};

struct HttpResponse {
  int status = 0;  // 0 when the connection failed
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

// cpp-httplib client; https URLs go through OpenSSL.
class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(120));
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers) override;

 private:
  std::chrono::seconds timeout_;
};

struct BackendSettings {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  std::string api_key;
  double temperature = 0.0;
  int max_tokens = 1024;
  int retries = 3;
  std::chrono::milliseconds backoff{500};  // doubled after each failure
  int max_in_flight = 2;
};

// Chat-completion wire protocol (POST {base_url}/chat/completions).
class ChatCompletionBackend : public ModelBackend {
 public:
  ChatCompletionBackend(BackendSettings settings, std::shared_ptr<HttpTransport> transport = nullptr);

  std::string complete(const PromptBundle& bundle) override;
  std::string name() const override { return "chat:" + settings_.model; }

  std::string request_body(const PromptBundle& bundle) const;
  const BackendSettings& settings() const { return settings_; }

  // Hook for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;

 private:
  BackendSettings settings_;
  std::shared_ptr<HttpTransport> transport_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

// Disk cache in front of another backend: one JSON file per request digest.
class CachedBackend : public ModelBackend {
 public:
  CachedBackend(std::shared_ptr<ModelBackend> inner, std::string cache_dir, std::string key_salt = {});

  std::string complete(const PromptBundle& bundle) override;
  std::string name() const override { return inner_ ? inner_->name() : "cache"; }

  std::string cache_path(const PromptBundle& bundle) const;
  int hits() const { return hits_; }
  int misses() const { return misses_; }

 private:
  std::shared_ptr<ModelBackend> inner_;  // may be null: cache-only
  std::string dir_;
  std::string salt_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;
  std::atomic<int> hits_{0}, misses_{0};
};

std::string query_model(const PromptBundle& bundle, ModelBackend& backend);

// ---- refinement ----------------------------------------------------------

struct VulnerableStatement {
  int row = 0;
  RowKind kind = RowKind::Context;
  std::optional<int> old_line;
  std::string text;
};

struct VulnerableStatementSet {
  std::string function_name;
  std::string file_path;
  std::string commit;
  std::string logic_summary;
  std::vector<VulnerableStatement> statements;

  std::set<int> rows() const;
};

struct RefineOptions {
  PromptStrategy strategy = PromptStrategy::FewShotCot;
  int reprompts = 2;
  const ExemplarLibrary* exemplars = nullptr;  // builtin when null
};

struct RefineResult {
  VulnerableStatementSet statements;
  bool degraded = false;  // the whole flow was kept
  int attempts = 0;
  std::string raw_response;
  std::vector<std::string> warnings;
};

// Build, query and parse; after `reprompts` failed retries the flow's
// non-added statements become the vulnerable statements. Throws PreconditionViolation on an empty
// flow and propagates BackendUnavailable.
RefineResult refine(const CveContext& ctx, const DangerousFlow& flow, ModelBackend& backend,
                    const RefineOptions& options = {});

}  // namespace vtrace
