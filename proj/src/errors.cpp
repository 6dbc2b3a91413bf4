#include "aiflab/errors.hpp"

namespace aiflab {

std::string_view kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::NumericsError: return "NumericsError";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::DidNotConverge: return "DidNotConverge";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::CombinatorialLimit: return "CombinatorialLimit";
    case ErrorKind::PNotSupported: return "PNotSupported";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::DegenerateEstimate: return "DegenerateEstimate";
    case ErrorKind::IntegralDiverged: return "IntegralDiverged";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::BracketError: return "BracketError";
    case ErrorKind::SystemInconsistent: return "SystemInconsistent";
  }
  return "Unknown";
}

bool is_usage_kind(ErrorKind k) {
  return k == ErrorKind::ConfigError || k == ErrorKind::PNotSupported ||
         k == ErrorKind::CombinatorialLimit ||
         k == ErrorKind::DimensionError;
}

void fail(ErrorKind kind, const std::string& msg) { throw AifError(kind, msg); }

}  // namespace aiflab
