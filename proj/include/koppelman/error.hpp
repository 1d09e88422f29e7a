#pragma once

#include <stdexcept>
#include <string>

namespace koppelman {

enum class ErrorCode {
  division_by_zero,
  unbound_variable,
  parse_error,
  ambient_mismatch,
  rank_exceeded,
  generator_out_of_range,
  support_function_invalid,
  weight_axiom_violation,
  chern_inconsistent,
  duality_required,
  degree_out_of_range,
  degree_mismatch,
  singularity_unhandled,
  twist_mismatch,
  not_closed,
  case_mismatch,
  invalid_argument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace koppelman
