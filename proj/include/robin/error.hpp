#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace robin {

enum class ErrorCode {
  InvalidArgument,
  SelfIntersection,
  DegenerateEdge,
  LabelCountMismatch,
  MeshFailure,
  InvalidMesh,
  EmptyRegion,
  NotElliptic,
  LabelMissing,
  QuadratureFailure,
  SingularBoundaryMass,
  NotPositiveDefinite,
  ConvergenceFailure,
  InsufficientSpectrum,
  ZeroVector,
  DependentVectors,
  ComparisonFailed,
  MismatchedMeshes,
  NonConvergent,
  ParseError,
  ValidationError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SelfIntersection: return "SelfIntersection";
    case ErrorCode::DegenerateEdge: return "DegenerateEdge";
    case ErrorCode::LabelCountMismatch: return "LabelCountMismatch";
    case ErrorCode::MeshFailure: return "MeshFailure";
    case ErrorCode::InvalidMesh: return "InvalidMesh";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::NotElliptic: return "NotElliptic";
    case ErrorCode::LabelMissing: return "LabelMissing";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::SingularBoundaryMass: return "SingularBoundaryMass";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InsufficientSpectrum: return "InsufficientSpectrum";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DependentVectors: return "DependentVectors";
    case ErrorCode::ComparisonFailed: return "ComparisonFailed";
    case ErrorCode::MismatchedMeshes: return "MismatchedMeshes";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// CLI maps each code to its own exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define ROBIN_THROW_IF(cond, code, msg)          \
  do {                                           \
    if (cond) throw ::robin::Error((code), (msg)); \
  } while (0)

}  // namespace robin
