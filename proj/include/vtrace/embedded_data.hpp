#pragma once

#include <string_view>

// Data files compiled into the library.
namespace vtrace::embedded {

std::string_view exemplars();
std::string_view sensitive_functions();
std::string_view cwe_types();
std::string_view report_schema();

}  // namespace vtrace::embedded
