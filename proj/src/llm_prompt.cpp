#include <regex>
#include <sstream>

#include "json.hpp"

#include "vtrace/embedded_data.hpp"
#include "vtrace/errors.hpp"
#include "vtrace/llm.hpp"
#include "vtrace/text_util.hpp"
#include "vtrace/weighting.hpp"

namespace vtrace {

using json = nlohmann::json;

const char* const kSystemRole = "You are a security researcher, expert in detecting security vulnerabilities.";
const char* const kReasoningInstruction = "Please reason the vulnerability logic from the provided code";
const char* const kResponseFormat =
    "Provide a response only in the following format: vulnerability logic: <text>\n"
    "vulnerable lines : [<Line number List>]\n"
    "Do not include the added line number (with +) and anything else in response.";

bool CveContext::has_valid_id() const {
  static const std::regex pattern(R"(CVE-\d{4}-\d{4,})");
  return cve_id.empty() || std::regex_match(cve_id, pattern);
}

std::string_view to_string(PromptStrategy s) {
  switch (s) {
    case PromptStrategy::ZeroShot: return "zero_shot";
    case PromptStrategy::FewShot: return "few_shot";
    case PromptStrategy::FewShotCot: return "few_shot_cot";
  }
  return "few_shot_cot";
}

PromptStrategy prompt_strategy_from_string(std::string_view s) {
  if (s == "zero_shot") return PromptStrategy::ZeroShot;
  if (s == "few_shot") return PromptStrategy::FewShot;
  if (s == "few_shot_cot") return PromptStrategy::FewShotCot;
  throw ConfigError("unknown strategy '" + std::string(s) + "' (expected zero_shot, few_shot or few_shot_cot)");
}

namespace {

Exemplar exemplar_from(const json& j) {
  Exemplar e;
  e.cve_id = j.value("cve_id", "");
  e.cwe_id = j.value("cwe_id", "");
  e.description = j.value("description", "");
  e.flow = j.at("flow").get<std::string>();
  e.logic = j.at("logic").get<std::string>();
  e.lines = j.at("lines").get<std::vector<int>>();
  return e;
}

std::string or_unknown(const std::string& s) { return trim(s).empty() ? "unknown" : s; }

std::string line_list(const std::vector<int>& lines) {
  std::string out = "[";
  for (std::size_t i = 0; i < lines.size(); ++i) out += (i ? ", " : "") + std::to_string(lines[i]);
  return out + "]";
}

void append_case(std::string& out, const std::string& cve, const std::string& cwe, const std::string& description,
                 const std::string& flow) {
  out += "CVE ID: " + or_unknown(cve) + "\n";
  out += "CWE ID: " + or_unknown(cwe) + "\n";
  out += "CVE description: " + or_unknown(description) + "\n";
  out += "Dangerous flow:\n" + flow;
  if (!flow.empty() && flow.back() != '\n') out += "\n";
}

}  // namespace

ExemplarLibrary ExemplarLibrary::from_json(std::string_view json_text) {
  ExemplarLibrary lib;
  try {
    auto j = json::parse(json_text);
    for (const auto& e : j.at("defaults")) lib.defaults.push_back(exemplar_from(e));
    if (j.contains("by_type"))
      for (auto it = j["by_type"].begin(); it != j["by_type"].end(); ++it)
        for (const auto& e : it.value()) lib.by_type[it.key()].push_back(exemplar_from(e));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("exemplar file: ") + e.what());
  }
  return lib;
}

ExemplarLibrary ExemplarLibrary::builtin() {
  static const ExemplarLibrary lib = from_json(embedded::exemplars());
  return lib;
}

const std::vector<Exemplar>& ExemplarLibrary::for_cwe(std::string_view cwe_id) const {
  if (auto type = vulnerability_type_for_cwe(cwe_id)) {
    auto it = by_type.find(*type);
    if (it != by_type.end() && !it->second.empty()) return it->second;
  }
  return defaults;
}

std::string PromptBundle::digest() const {
  json j = json::array({cve_id, system_text, user_text});
  return sha256_hex(j.dump());
}

std::string render_flow(const DangerousFlow& flow) {
  std::string out;
  for (const auto& s : flow.statements) {
    const char* marker = s.kind == RowKind::Deleted ? "-" : s.kind == RowKind::Added ? "+" : " ";
    out += std::to_string(s.row) + " " + marker + " " + s.text + "\n";
  }
  return out;
}

PromptBundle build_prompt(const CveContext& ctx, const DangerousFlow& flow, PromptStrategy strategy,
                          const ExemplarLibrary& exemplars) {
  if (flow.statements.empty()) throw PreconditionViolation("cannot build a prompt for an empty dangerous flow");
  PromptBundle b;
  b.cve_id = ctx.cve_id;
  b.system_text = std::string(kSystemRole) +
                  "\nI will provide you with a CVE ID, CWE ID, CVE description, and dangerous code."
                  "\nPlease extract the vulnerability logic from the code and indicate which statements are "
                  "relevant to the vulnerability logic.\n" +
                  kResponseFormat;

  std::string user;
  if (strategy != PromptStrategy::ZeroShot) {
    b.exemplars = exemplars.for_cwe(ctx.cwe_id);
    for (std::size_t i = 0; i < b.exemplars.size(); ++i) {
      const auto& e = b.exemplars[i];
      user += "Example " + std::to_string(i + 1) + ":\n";
      append_case(user, e.cve_id, e.cwe_id, e.description, e.flow);
      user += "vulnerability logic: " + e.logic + "\n";
      user += "vulnerable lines : " + line_list(e.lines) + "\n\n";
    }
    user += "Now analyze the following case.\n";
  }
  append_case(user, ctx.cve_id, ctx.cwe_id, ctx.description, render_flow(flow));
  if (strategy == PromptStrategy::FewShotCot) {
    b.cot_instruction = std::string(kReasoningInstruction) + ", then conclude with the vulnerable lines.";
    user += b.cot_instruction + "\n";
  }
  b.user_text = std::move(user);
  return b;
}

LlmResponse parse_response(std::string_view raw, const DangerousFlow& flow) {
  LlmResponse r;
  r.raw = std::string(raw);
  const std::string text(raw);

  static const std::regex labelled(R"(vulnerable\s+lines?\s*:?\s*\[([^\]]*)\])", std::regex::icase);
  static const std::regex any_list(R"(\[([\d\s,\-]*\d[\d\s,\-]*)\])");
  std::smatch m, last;
  bool found = false;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), labelled); it != std::sregex_iterator(); ++it) {
    last = *it;
    found = true;
  }
  if (!found)
    for (auto it = std::sregex_iterator(text.begin(), text.end(), any_list); it != std::sregex_iterator(); ++it) {
      last = *it;
      found = true;
    }
  if (!found) throw UnparseableResponse("no bracketed line list in model response");

  // Logic text: after the last "vulnerability logic:" marker before the list.
  const std::string head = text.substr(0, static_cast<std::size_t>(last.position(0)));
  static const std::regex logic_marker(R"(vulnerability\s+logic\s*:)", std::regex::icase);
  std::size_t logic_start = std::string::npos;
  for (auto it = std::sregex_iterator(head.begin(), head.end(), logic_marker); it != std::sregex_iterator(); ++it)
    logic_start = static_cast<std::size_t>(it->position(0) + it->length(0));
  r.vulnerability_logic = std::string(trim(logic_start == std::string::npos ? head : head.substr(logic_start)));

  std::set<int> requested;
  std::stringstream items(last[1].str());
  std::string item;
  while (std::getline(items, item, ',')) {
    auto t = std::string(trim(item));
    if (t.empty()) continue;
    try {
      auto dash = t.find('-', 1);
      if (dash != std::string::npos) {
        int a = std::stoi(t.substr(0, dash)), b = std::stoi(t.substr(dash + 1));
        for (int x = std::min(a, b); x <= std::max(a, b) && x - std::min(a, b) < 10000; ++x) requested.insert(x);
      } else {
        requested.insert(std::stoi(t));
      }
    } catch (const std::exception&) {
      r.warnings.push_back("ignored list item '" + t + "'");
    }
  }

  for (int line : requested) {
    const FlowRow* row = nullptr;
    bool in_flow = false;
    for (const auto& s : flow.statements)
      if (s.row == line) in_flow = true;
    if (in_flow) row = flow.row(line);
    if (!row) {
      r.warnings.push_back("line " + std::to_string(line) + " is not in the dangerous flow; dropped");
    } else if (row->kind == RowKind::Added) {
      r.warnings.push_back("line " + std::to_string(line) + " is an added line; dropped");
    } else {
      r.vulnerable_lines.insert(line);
    }
  }
  return r;
}

}  // namespace vtrace
