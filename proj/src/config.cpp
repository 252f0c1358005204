#include "vtrace/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vtrace/errors.hpp"
#include "vtrace/text_util.hpp"

namespace vtrace {

std::string_view to_string(OutputFormat f) { return f == OutputFormat::Json ? "json" : "markdown"; }

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Stub: return "stub";
    case BackendKind::Chat: return "chat";
    case BackendKind::CacheOnly: return "cache";
  }
  return "stub";
}

std::string_view to_string(SliceDirection d) {
  switch (d) {
    case SliceDirection::Both: return "both";
    case SliceDirection::BackwardOnly: return "backward";
    case SliceDirection::ForwardOnly: return "forward";
  }
  return "both";
}

namespace {

double parse_real(std::string_view key, std::string_view v) {
  std::string s(trim(v));
  char* end = nullptr;
  double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(d))
    throw ConfigError(std::string(key) + ": expected a number, got '" + s + "'");
  return d;
}

int parse_int(std::string_view key, std::string_view v) {
  auto s = trim(v);
  int out = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(s) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  auto s = trim(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(s) + "'");
}

std::string fmt_real(double d) {
  std::ostringstream os;
  os << d;
  return os.str();
}

struct KeySpec {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define VTRACE_STRING_KEY(name, member)                                            \
  KeySpec {                                                                        \
    name, [](RunConfig& c, std::string_view v) { c.member = std::string(trim(v)); }, \
        [](const RunConfig& c) { return c.member; }                                \
  }
#define VTRACE_REAL_KEY(name, member)                                                          \
  KeySpec {                                                                                    \
    name, [](RunConfig& c, std::string_view v) { c.member = parse_real(name, v); },            \
        [](const RunConfig& c) { return fmt_real(c.member); }                                  \
  }
#define VTRACE_INT_KEY(name, member)                                                  \
  KeySpec {                                                                           \
    name, [](RunConfig& c, std::string_view v) { c.member = parse_int(name, v); },    \
        [](const RunConfig& c) { return std::to_string(c.member); }                   \
  }

const std::vector<KeySpec>& specs() {
  static const std::vector<KeySpec> table = {
      VTRACE_STRING_KEY("repo", repo_path),
      VTRACE_STRING_KEY("commit", commit),
      VTRACE_STRING_KEY("diff", diff_path),
      VTRACE_STRING_KEY("cve", cve.cve_id),
      VTRACE_STRING_KEY("cwe", cve.cwe_id),
      VTRACE_STRING_KEY("description", cve.description),
      KeySpec{"strategy", [](RunConfig& c, std::string_view v) { c.strategy = prompt_strategy_from_string(trim(v)); },
              [](const RunConfig& c) { return std::string(to_string(c.strategy)); }},
      VTRACE_REAL_KEY("theta1", thresholds.line),
      VTRACE_REAL_KEY("theta2", thresholds.ast),
      VTRACE_REAL_KEY("theta3", thresholds.score),
      VTRACE_REAL_KEY("weight_v", weights.weight_v),
      VTRACE_REAL_KEY("weight_d", weights.weight_d),
      KeySpec{"gating", [](RunConfig& c, std::string_view v) { c.weights.gating = gating_mode_from_string(trim(v)); },
              [](const RunConfig& c) { return std::string(to_string(c.weights.gating)); }},
      VTRACE_INT_KEY("wrapper_depth", weights.wrapper_depth),
      KeySpec{"direction",
              [](RunConfig& c, std::string_view v) {
                auto s = trim(v);
                if (s == "both") c.direction = SliceDirection::Both;
                else if (s == "backward") c.direction = SliceDirection::BackwardOnly;
                else if (s == "forward") c.direction = SliceDirection::ForwardOnly;
                else throw ConfigError("direction: expected both, backward or forward, got '" + std::string(s) + "'");
              },
              [](const RunConfig& c) { return std::string(to_string(c.direction)); }},
      KeySpec{"backend",
              [](RunConfig& c, std::string_view v) {
                auto s = trim(v);
                if (s == "stub") c.backend = BackendKind::Stub;
                else if (s == "chat") c.backend = BackendKind::Chat;
                else if (s == "cache") c.backend = BackendKind::CacheOnly;
                else throw ConfigError("backend: expected stub, chat or cache, got '" + std::string(s) + "'");
              },
              [](const RunConfig& c) { return std::string(to_string(c.backend)); }},
      VTRACE_STRING_KEY("stub_answers", stub_answers),
      VTRACE_STRING_KEY("backend_url", backend_settings.base_url),
      VTRACE_STRING_KEY("model", backend_settings.model),
      KeySpec{"api_key", [](RunConfig& c, std::string_view v) { c.backend_settings.api_key = std::string(trim(v)); },
              [](const RunConfig& c) { return std::string(c.backend_settings.api_key.empty() ? "unset" : "set"); }},
      VTRACE_REAL_KEY("temperature", backend_settings.temperature),
      VTRACE_INT_KEY("max_tokens", backend_settings.max_tokens),
      VTRACE_INT_KEY("retries", backend_settings.retries),
      VTRACE_INT_KEY("max_in_flight", backend_settings.max_in_flight),
      VTRACE_STRING_KEY("cache_dir", cache_dir),
      KeySpec{"format",
              [](RunConfig& c, std::string_view v) {
                auto s = trim(v);
                if (s == "json") c.format = OutputFormat::Json;
                else if (s == "markdown" || s == "md") c.format = OutputFormat::Markdown;
                else throw ConfigError("format: expected json or markdown, got '" + std::string(s) + "'");
              },
              [](const RunConfig& c) { return std::string(to_string(c.format)); }},
      VTRACE_INT_KEY("step_limit", step_limit),
      VTRACE_STRING_KEY("trace_log", trace_log),
      VTRACE_INT_KEY("inline_depth", inline_depth),
      VTRACE_STRING_KEY("tag_pattern", tag_pattern),
      KeySpec{"first_parent_only",
              [](RunConfig& c, std::string_view v) { c.first_parent_only = parse_bool("first_parent_only", v); },
              [](const RunConfig& c) { return std::string(c.first_parent_only ? "true" : "false"); }},
      VTRACE_STRING_KEY("sensitive_table", sensitive_table),
      VTRACE_STRING_KEY("exemplars", exemplars_path),
  };
  return table;
}

#undef VTRACE_STRING_KEY
#undef VTRACE_REAL_KEY
#undef VTRACE_INT_KEY

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : specs()) k.push_back(s.key);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  std::string k(trim(key));
  for (auto& c : k)
    if (c == '-') c = '_';
  for (const auto& s : specs())
    if (s.key == k) {
      s.set(cfg, value);
      return;
    }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
  int number = 0;
  for (const auto& raw : split_lines(text)) {
    ++number;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    try {
      set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

void apply_environment(RunConfig& cfg, const std::function<const char*(const char*)>& getenv_fn) {
  auto get = [&](const char* name) -> const char* { return getenv_fn ? getenv_fn(name) : std::getenv(name); };
  const std::pair<const char*, const char*> vars[] = {{"VTRACE_API_KEY", "api_key"},
                                                      {"VTRACE_API_BASE", "backend_url"},
                                                      {"VTRACE_MODEL", "model"},
                                                      {"VTRACE_BACKEND", "backend"},
                                                      {"VTRACE_CACHE_DIR", "cache_dir"}};
  for (const auto& [var, key] : vars)
    if (const char* v = get(var); v && *v) {
      try {
        set_config_value(cfg, key, v);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(var) + ": " + e.what());
      }
    }
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : specs()) out.emplace_back(s.key, s.get(cfg));
  return out;
}

std::vector<std::string> RunConfig::problems() const {
  std::vector<std::string> p;
  auto unit = [&](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) p.push_back(std::string(name) + " must be in [0, 1], got " + fmt_real(v));
  };
  if (trim(repo_path).empty()) p.push_back("repo must be set");
  if (commit.empty() == diff_path.empty()) p.push_back("exactly one of commit or diff must be set");
  if (!cve.has_valid_id()) p.push_back("cve '" + cve.cve_id + "' does not look like CVE-YYYY-NNNN");
  unit("theta1", thresholds.line);
  unit("theta2", thresholds.ast);
  unit("theta3", thresholds.score);
  if (!(weights.weight_v > 0.0)) p.push_back("weight_v must be positive, got " + fmt_real(weights.weight_v));
  if (!(weights.weight_d > 0.0)) p.push_back("weight_d must be positive, got " + fmt_real(weights.weight_d));
  if (weights.wrapper_depth < 0) p.push_back("wrapper_depth must be >= 0");
  if (backend_settings.max_tokens < 1) p.push_back("max_tokens must be >= 1");
  if (backend_settings.retries < 0) p.push_back("retries must be >= 0");
  if (backend_settings.max_in_flight < 1) p.push_back("max_in_flight must be >= 1");
  if (!(backend_settings.temperature >= 0.0 && backend_settings.temperature <= 2.0))
    p.push_back("temperature must be in [0, 2]");
  if (backend == BackendKind::Chat && trim(backend_settings.base_url).empty()) p.push_back("backend_url must be set");
  if (backend == BackendKind::CacheOnly && cache_dir.empty()) p.push_back("backend cache needs cache_dir");
  if (step_limit < 1) p.push_back("step_limit must be >= 1, got " + std::to_string(step_limit));
  if (inline_depth < 0) p.push_back("inline_depth must be >= 0");
  if (trim(tag_pattern).empty()) p.push_back("tag_pattern must not be empty");
  return p;
}

void RunConfig::validate() const {
  auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& s : p) msg += "\n  - " + s;
  throw ConfigError(msg);
}

}  // namespace vtrace
