#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aiflab {

enum class ErrorKind {
  DimensionError,
  NumericsError,
  SingularJacobian,
  DidNotConverge,
  ConfigError,
  CombinatorialLimit,
  PNotSupported,
  SingularDesign,
  DegenerateEstimate,
  IntegralDiverged,
  Infeasible,
  BracketError,
  SystemInconsistent,
};

std::string_view kind_name(ErrorKind k);

// Usage-type kinds map to CLI exit code 1, the rest are numeric failures.
bool is_usage_kind(ErrorKind k);

class AifError : public std::runtime_error {
 public:
  AifError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& msg);

}  // namespace aiflab
