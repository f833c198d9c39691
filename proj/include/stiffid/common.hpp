#pragma once

// Shared value types and the error type used across the library.
// Internal units are fixed: mm, N, N*mm, rad.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stiffid {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mask6 = Eigen::Matrix<bool, 6, 6>;

enum class ErrorKind {
  AlreadyCentered,
  NotCentered,
  EmptySelection,
  EmptyField,
  InvalidRegion,
  DegenerateGeometry,
  NotSymmetric,
  EntryOutOfRange,
  ZeroMagnitude,
  NotCanonical,
  InsufficientExperiments,
  RankDeficientWrenches,
  SingularCompliance,
  InsufficientDof,
  TooFewRemaining,
  InvalidFraction,
  MissingCovariance,
  InvalidPattern,
  InvalidSpec,
  Parse,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::AlreadyCentered: return "AlreadyCentered";
    case ErrorKind::NotCentered: return "NotCentered";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::EmptyField: return "EmptyField";
    case ErrorKind::InvalidRegion: return "InvalidRegion";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::EntryOutOfRange: return "EntryOutOfRange";
    case ErrorKind::ZeroMagnitude: return "ZeroMagnitude";
    case ErrorKind::NotCanonical: return "NotCanonical";
    case ErrorKind::InsufficientExperiments: return "InsufficientExperiments";
    case ErrorKind::RankDeficientWrenches: return "RankDeficientWrenches";
    case ErrorKind::SingularCompliance: return "SingularCompliance";
    case ErrorKind::InsufficientDof: return "InsufficientDof";
    case ErrorKind::TooFewRemaining: return "TooFewRemaining";
    case ErrorKind::InvalidFraction: return "InvalidFraction";
    case ErrorKind::MissingCovariance: return "MissingCovariance";
    case ErrorKind::InvalidPattern: return "InvalidPattern";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// True for errors caused by the data being numerically unusable, as opposed
/// to malformed input. The CLI maps the two groups to different exit codes.
constexpr bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateGeometry:
    case ErrorKind::NotSymmetric:
    case ErrorKind::EntryOutOfRange:
    case ErrorKind::NotCanonical:
    case ErrorKind::InsufficientExperiments:
    case ErrorKind::RankDeficientWrenches:
    case ErrorKind::SingularCompliance:
    case ErrorKind::InsufficientDof:
    case ErrorKind::TooFewRemaining:
    case ErrorKind::EmptySelection:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Optional provenance filled in by ingestion / pipeline code.
  std::optional<std::string> file;
  std::optional<std::size_t> line;
  std::optional<std::size_t> experiment;

 private:
  ErrorKind kind_;
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace stiffid
