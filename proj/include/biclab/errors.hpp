#pragma once

#include <stdexcept>
#include <string>

namespace biclab {

enum class ErrorCode {
  invalid_input,
  infeasible_geometry,
  degenerate_geometry,
  contradiction,
  rank_deficient,
  iteration_limit,
  solver_error,
  precondition_violation,
  lift_undefined,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI) can map it to a diagnostic without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace biclab
