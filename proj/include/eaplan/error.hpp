#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eaplan {

enum class Errc {
  InvalidArgument,
  OutOfRange,
  DegeneratePolygon,
  UnreachableFinalPoint,
  NotPrimitive,
  InvalidOrder,
  InvalidPeriod,
  LengthMismatch,
  DegenerateBounds,
  PredictorUndefined,
  ParseError,
  UnsortedKnots,
  TooFewKnots,
  NotMeasured,
  InfeasibleLoad,
  Infeasible,
  SolverFailure,
  ZeroSoc,
  ScenarioInvalid,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::DegeneratePolygon: return "DegeneratePolygon";
    case Errc::UnreachableFinalPoint: return "UnreachableFinalPoint";
    case Errc::NotPrimitive: return "NotPrimitive";
    case Errc::InvalidOrder: return "InvalidOrder";
    case Errc::InvalidPeriod: return "InvalidPeriod";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DegenerateBounds: return "DegenerateBounds";
    case Errc::PredictorUndefined: return "PredictorUndefined";
    case Errc::ParseError: return "ParseError";
    case Errc::UnsortedKnots: return "UnsortedKnots";
    case Errc::TooFewKnots: return "TooFewKnots";
    case Errc::NotMeasured: return "NotMeasured";
    case Errc::InfeasibleLoad: return "InfeasibleLoad";
    case Errc::Infeasible: return "Infeasible";
    case Errc::SolverFailure: return "SolverFailure";
    case Errc::ZeroSoc: return "ZeroSoc";
    case Errc::ScenarioInvalid: return "ScenarioInvalid";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code, so
/// callers can branch on the condition without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace eaplan
