#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace roadscale {

enum class ErrorCode {
  // geometry
  NonPositiveDepth,
  HorizonRow,
  InvalidRotation,
  // motion estimation
  InsufficientMatches,
  DegenerateConfiguration,
  CheiralityAmbiguous,
  SingularNormalEquations,
  // road selection / plane fitting
  TooFewPoints,
  AllCollinear,
  DegenerateTriangle,
  NoConsensus,
  NonPositiveHeight,
  EmptyQueue,
  // evaluation
  LengthMismatch,
  DegenerateGeometry,
  PathTooShort,
  // synthesis
  EmptyScene,
  // io
  ParseError,
  UnsupportedFormat,
  DimensionMismatch,
  IoError,
  ConfigError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library. The code identifies the failure
/// class; `line()` is set for parse errors tied to a line of an input file.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<int> line = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), line_(line), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<int> line() const noexcept { return line_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<int> line_;
  std::string detail_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::HorizonRow: return "HorizonRow";
    case ErrorCode::InvalidRotation: return "InvalidRotation";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::CheiralityAmbiguous: return "CheiralityAmbiguous";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::AllCollinear: return "AllCollinear";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::NonPositiveHeight: return "NonPositiveHeight";
    case ErrorCode::EmptyQueue: return "EmptyQueue";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::PathTooShort: return "PathTooShort";
    case ErrorCode::EmptyScene: return "EmptyScene";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace roadscale
