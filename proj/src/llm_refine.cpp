#include "vtrace/errors.hpp"
#include "vtrace/llm.hpp"

namespace vtrace {

std::set<int> VulnerableStatementSet::rows() const {
  std::set<int> out;
  for (const auto& s : statements) out.insert(s.row);
  return out;
}

namespace {

VulnerableStatement statement_for(const DangerousFlow& flow, int row) {
  VulnerableStatement v;
  v.row = row;
  if (const FlowRow* r = flow.row(row)) {
    v.kind = r->kind;
    v.old_line = r->old_line;
    v.text = r->text;
  }
  return v;
}

const char* const kReprompt =
    "Your previous answer did not follow the required format or named no line from the dangerous flow. "
    "Answer again using exactly:\nvulnerability logic: <text>\nvulnerable lines : [<Line number List>]";

}  // namespace

RefineResult refine(const CveContext& ctx, const DangerousFlow& flow, ModelBackend& backend,
                    const RefineOptions& options) {
  if (flow.statements.empty()) throw PreconditionViolation("refine needs a nonempty dangerous flow");
  const ExemplarLibrary& lib = options.exemplars ? *options.exemplars : ExemplarLibrary::builtin();
  PromptBundle bundle = build_prompt(ctx, flow, options.strategy, lib);

  RefineResult result;
  result.statements.function_name = flow.function_name;
  result.statements.file_path = flow.file_path;
  result.statements.commit = flow.commit;

  for (int attempt = 0; attempt <= options.reprompts; ++attempt) {
    ++result.attempts;
    std::string raw = query_model(bundle, backend);
    result.raw_response = raw;
    try {
      LlmResponse parsed = parse_response(raw, flow);
      result.warnings.insert(result.warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
      if (parsed.vulnerable_lines.empty()) throw UnparseableResponse("response names no usable line");
      result.statements.logic_summary = parsed.vulnerability_logic;
      for (int row : parsed.vulnerable_lines) result.statements.statements.push_back(statement_for(flow, row));
      return result;
    } catch (const UnparseableResponse& e) {
      result.warnings.push_back("attempt " + std::to_string(attempt + 1) + ": " + e.what());
      bundle.user_text += "\n" + std::string(kReprompt) + "\n";
    }
  }

  // Degraded: keep every statement of the flow that exists before the patch.
  result.degraded = true;
  result.statements.logic_summary.clear();
  for (const auto& s : flow.statements)
    if (s.kind != RowKind::Added) result.statements.statements.push_back(statement_for(flow, s.row));
  return result;
}

}  // namespace vtrace
