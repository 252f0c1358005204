#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "vtrace/errors.hpp"
#include "vtrace/llm.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---- stub -----------------------------------------------------------------

StubBackend::StubBackend(std::map<std::string, std::string> answers) : answers_(std::move(answers)) {}

std::unique_ptr<StubBackend> StubBackend::from_json(std::string_view json_text) {
  std::map<std::string, std::string> answers;
  try {
    auto j = json::parse(json_text);
    if (!j.is_object()) throw ConfigError("stub answers must be a JSON object of CVE id -> response text");
    for (auto it = j.begin(); it != j.end(); ++it) answers[it.key()] = it.value().get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("stub answers: ") + e.what());
  }
  return std::make_unique<StubBackend>(std::move(answers));
}

std::unique_ptr<StubBackend> StubBackend::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read stub answers file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string StubBackend::complete(const PromptBundle& bundle) {
  ++calls_;
  auto it = answers_.find(bundle.cve_id);
  if (it == answers_.end()) it = answers_.find("*");
  return it == answers_.end() ? std::string() : it->second;
}

// ---- HTTP -----------------------------------------------------------------

HttplibTransport::HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse HttplibTransport::post(const std::string& url, const std::string& body,
                                    const std::vector<std::pair<std::string, std::string>>& headers) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return {0, "bad url " + url};
  auto path_start = url.find('/', scheme_end + 3);
  std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

ChatCompletionBackend::ChatCompletionBackend(BackendSettings settings, std::shared_ptr<HttpTransport> transport)
    : sleep([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      settings_(std::move(settings)),
      transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()) {}

std::string ChatCompletionBackend::request_body(const PromptBundle& bundle) const {
  json j;
  j["model"] = settings_.model;
  j["messages"] = json::array({{{"role", "system"}, {"content", bundle.system_text}},
                               {{"role", "user"}, {"content", bundle.user_text}}});
  j["temperature"] = settings_.temperature;
  j["max_tokens"] = settings_.max_tokens;
  return j.dump();
}

std::string ChatCompletionBackend::complete(const PromptBundle& bundle) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < std::max(1, settings_.max_in_flight); });
    ++in_flight_;
  }
  struct Release {
    ChatCompletionBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};

  std::string base = settings_.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  const std::string url = base + "/chat/completions";
  std::vector<std::pair<std::string, std::string>> headers;
  if (!settings_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + settings_.api_key);
  const std::string body = request_body(bundle);

  std::string last_error;
  auto delay = settings_.backoff;
  for (int attempt = 0; attempt <= settings_.retries; ++attempt) {
    if (attempt > 0) {
      sleep(delay);
      delay *= 2;
    }
    HttpResponse res = transport_->post(url, body, headers);
    if (res.status == 200) {
      try {
        auto j = json::parse(res.body);
        const auto& choice = j.at("choices").at(0);
        if (choice.value("finish_reason", "") == "length")
          throw TokenLimit("completion truncated at " + std::to_string(settings_.max_tokens) + " tokens");
        return choice.at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        last_error = std::string("malformed completion: ") + e.what();
        continue;
      }
    }
    if (res.status == 400 && res.body.find("context_length") != std::string::npos)
      throw TokenLimit("prompt exceeds the model context: " + res.body.substr(0, 300));
    last_error = res.status == 0 ? "connection failed: " + res.body
                                 : "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 300);
    const bool retryable = res.status == 0 || res.status == 408 || res.status == 429 || res.status >= 500;
    if (!retryable) break;
  }
  throw BackendUnavailable(url + ": " + last_error);
}

// ---- cache ----------------------------------------------------------------

CachedBackend::CachedBackend(std::shared_ptr<ModelBackend> inner, std::string cache_dir, std::string key_salt)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)), salt_(std::move(key_salt)) {}

std::string CachedBackend::cache_path(const PromptBundle& bundle) const {
  return (fs::path(dir_) / (sha256_hex(salt_ + "\n" + bundle.digest()) + ".json")).string();
}

std::string CachedBackend::complete(const PromptBundle& bundle) {
  const std::string path = cache_path(bundle);
  std::shared_ptr<std::mutex> key_lock;
  {
    std::lock_guard lock(mu_);
    auto& slot = key_locks_[path];
    if (!slot) slot = std::make_shared<std::mutex>();
    key_lock = slot;
  }
  std::lock_guard guard(*key_lock);

  if (std::ifstream in{path, std::ios::binary}) {
    try {
      auto j = json::parse(in);
      ++hits_;
      return j.at("raw_response").get<std::string>();
    } catch (const json::exception&) {
      // Corrupt entry: fall through and refetch.
    }
  }
  ++misses_;
  if (!inner_) throw BackendUnavailable("no cached response and no backend configured");
  std::string raw = inner_->complete(bundle);

  std::error_code ec;
  fs::create_directories(dir_, ec);
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json entry;
  entry["request_digest"] = bundle.digest();
  entry["raw_response"] = raw;
  entry["timestamp"] = stamp;
  const std::string tmp = path + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << entry.dump(2) << "\n";
  }
  fs::rename(tmp, path, ec);
  if (ec) fs::remove(tmp, ec);
  return raw;
}

std::string query_model(const PromptBundle& bundle, ModelBackend& backend) { return backend.complete(bundle); }

}  // namespace vtrace
