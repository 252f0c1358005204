#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vtrace {

// Base of every error the library raises. `code()` is a stable, machine
// readable name used in reports and by the Python bindings.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define VTRACE_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

// repo_access
VTRACE_DEFINE_ERROR(NotARepository);
VTRACE_DEFINE_ERROR(IoError);
VTRACE_DEFINE_ERROR(UnknownCommit);
VTRACE_DEFINE_ERROR(FileAbsent);
VTRACE_DEFINE_ERROR(LineOutOfRange);
VTRACE_DEFINE_ERROR(FunctionAbsent);
VTRACE_DEFINE_ERROR(GitCommandFailed);

// patch_model
VTRACE_DEFINE_ERROR(EmptyPatch);
VTRACE_DEFINE_ERROR(FunctionAttributionFailed);

// c_front
VTRACE_DEFINE_ERROR(Unparseable);

// slicer
VTRACE_DEFINE_ERROR(EmptyFlow);

// llm_refiner
VTRACE_DEFINE_ERROR(BackendUnavailable);
VTRACE_DEFINE_ERROR(TokenLimit);
VTRACE_DEFINE_ERROR(UnparseableResponse);
VTRACE_DEFINE_ERROR(PreconditionViolation);

// clone_detect
VTRACE_DEFINE_ERROR(EmptySet);
VTRACE_DEFINE_ERROR(ParseFailure);

// cli_report
VTRACE_DEFINE_ERROR(ConfigError);

#undef VTRACE_DEFINE_ERROR

class MalformedDiff : public Error {
 public:
  MalformedDiff(std::size_t offset, const std::string& message)
      : Error("MalformedDiff", message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace vtrace
