#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "vtrace/backtrace.hpp"
#include "vtrace/pipeline.hpp"

namespace vtrace {

inline constexpr std::string_view kReportSchemaVersion = "1.0.0";

nlohmann::ordered_json commit_to_json(const CommitId& c);
nlohmann::ordered_json flow_to_json(const DangerousFlow& flow);
nlohmann::ordered_json trace_to_json(const HistoryTrace& trace);
nlohmann::ordered_json verdict_to_json(const VersionVerdict& v, const std::vector<std::string>& ranges);

// One line of the trace log.
nlohmann::ordered_json comparison_to_json(const CommitComparison& c, const std::string& function_name);

// Keys keep a fixed order so reports diff cleanly. Timings are the only
// run-dependent values and can be left out.
nlohmann::ordered_json report_to_json(const AnalysisReport& report, bool include_timings = true);

std::string render_report(const AnalysisReport& report, OutputFormat format, bool include_timings = true);

// The JSON schema reports validate against.
std::string_view report_schema();

}  // namespace vtrace
