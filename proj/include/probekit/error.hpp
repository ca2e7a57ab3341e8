#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace probekit {

enum class ErrorCode {
  DuplicateId,
  NonFiniteCoordinate,
  UnknownId,
  SelfLoop,
  DuplicateLink,
  UnknownLink,
  StaleIndex,
  NegativeParameter,
  NonPositiveRadius,
  InvalidParameter,
  InconsistentState,
  NotPlaced,
  UnknownProbe,
  ProbeInHand,
  UnknownAttribute,
  NoActiveProbes,
  DegenerateDirection,
  DegenerateView,
  SelectionError,
  OutOfOrder,
  MalformedCommand,
  MalformedSnapshot,
  BadGraphFile,
  PortInUse,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateLink: return "DuplicateLink";
    case ErrorCode::UnknownLink: return "UnknownLink";
    case ErrorCode::StaleIndex: return "StaleIndex";
    case ErrorCode::NegativeParameter: return "NegativeParameter";
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::InconsistentState: return "InconsistentState";
    case ErrorCode::NotPlaced: return "NotPlaced";
    case ErrorCode::UnknownProbe: return "UnknownProbe";
    case ErrorCode::ProbeInHand: return "ProbeInHand";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::NoActiveProbes: return "NoActiveProbes";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::DegenerateView: return "DegenerateView";
    case ErrorCode::SelectionError: return "SelectionError";
    case ErrorCode::OutOfOrder: return "OutOfOrder";
    case ErrorCode::MalformedCommand: return "MalformedCommand";
    case ErrorCode::MalformedSnapshot: return "MalformedSnapshot";
    case ErrorCode::BadGraphFile: return "BadGraphFile";
    case ErrorCode::PortInUse: return "PortInUse";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is reported as an Error carrying
/// a stable code; the session engine turns these into error deltas.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace probekit
