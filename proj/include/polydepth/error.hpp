#pragma once

#include <stdexcept>
#include <string>

namespace polydepth {

enum class ErrorCode {
  Parse,
  EmptyMesh,
  IndexOutOfRange,
  NotInContact,
  SourcePenetrating,
  EmptyFeatures,
  NotPositiveDefinite,
  CoincidentCentroids,
  SeedingFailed,
  NotConvex,
  ZeroDenominator,
  InvalidArgument,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "parse";
    case ErrorCode::EmptyMesh: return "empty-mesh";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::NotInContact: return "not-in-contact";
    case ErrorCode::SourcePenetrating: return "source-penetrating";
    case ErrorCode::EmptyFeatures: return "empty-features";
    case ErrorCode::NotPositiveDefinite: return "not-positive-definite";
    case ErrorCode::CoincidentCentroids: return "coincident-centroids";
    case ErrorCode::SeedingFailed: return "seeding-failed";
    case ErrorCode::NotConvex: return "not-convex";
    case ErrorCode::ZeroDenominator: return "zero-denominator";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

/// Exception carrying a machine-checkable error category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace polydepth
