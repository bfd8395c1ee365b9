#pragma once

#include <stdexcept>
#include <string>

namespace mtmfg {

/// Machine-readable failure categories surfaced by the CLI exit status.
enum class ErrorCategory {
    kConfig,    // invalid scenario / parameter combination
    kGeometry,  // geometry precondition violated (band, cone, membership)
    kHorizon,   // time horizon too small for the requested solve
    kSolver,    // iteration failed to converge
    kIo,        // file read/write failure
    kInternal,  // invariant violation inside the library
};

const char* error_category_name(ErrorCategory c);

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) { throw Error(c, msg); }

inline void require(bool cond, ErrorCategory c, const std::string& msg) {
    if (!cond) fail(c, msg);
}

}  // namespace mtmfg
