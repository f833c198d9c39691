#pragma once

// Small-rotation algebra: skew matrices, rotation builders and the six
// rules for reading rotation angles back out of a rotation matrix.

#include "stiffid/common.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string_view>

namespace stiffid {

/// [v]x, so that skew(v) * u == v.cross(u).
inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

/// Linearized-fit design block for a node at q: P(q) * dphi == dphi x q.
inline Mat3 node_design_block(const Vec3& q) { return skew(q).transpose(); }

inline Mat3 rotation_x(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix();
}
inline Mat3 rotation_y(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}
inline Mat3 rotation_z(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

/// Exact rotation built as the product of elementary axis rotations
/// Rx(dphi_x) * Ry(dphi_y) * Rz(dphi_z). To first order this equals
/// I + [dphi]x; the second-order remainder is what linearized angle
/// extraction cannot see.
inline Mat3 composed_rotation(const Vec3& dphi) {
  return rotation_x(dphi.x()) * rotation_y(dphi.y()) * rotation_z(dphi.z());
}

/// Differential form I + [dphi]x (not orthogonal for finite dphi).
inline Mat3 differential_rotation(const Vec3& dphi) { return Mat3::Identity() + skew(dphi); }

inline double orthogonality_defect(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return orthogonality_defect(r) <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

enum class AngleExtractionMethod {
  PlusEntries,
  MinusEntries,
  Averaged,
  PlusAsin,
  MinusAsin,
  AveragedAsin,
};

inline constexpr std::array<AngleExtractionMethod, 6> kAllAngleMethods = {
    AngleExtractionMethod::PlusEntries, AngleExtractionMethod::MinusEntries,
    AngleExtractionMethod::Averaged,    AngleExtractionMethod::PlusAsin,
    AngleExtractionMethod::MinusAsin,   AngleExtractionMethod::AveragedAsin,
};

/// CLI token for a method ("plus", "avg-asin", ...).
constexpr std::string_view to_token(AngleExtractionMethod m) {
  switch (m) {
    case AngleExtractionMethod::PlusEntries: return "plus";
    case AngleExtractionMethod::MinusEntries: return "minus";
    case AngleExtractionMethod::Averaged: return "avg";
    case AngleExtractionMethod::PlusAsin: return "plus-asin";
    case AngleExtractionMethod::MinusAsin: return "minus-asin";
    case AngleExtractionMethod::AveragedAsin: return "avg-asin";
  }
  return "avg";
}

/// Table label used in study outputs ("SVD+", "SVD+-asin", ...).
constexpr std::string_view to_label(AngleExtractionMethod m) {
  switch (m) {
    case AngleExtractionMethod::PlusEntries: return "SVD+";
    case AngleExtractionMethod::MinusEntries: return "SVD-";
    case AngleExtractionMethod::Averaged: return "SVD+-";
    case AngleExtractionMethod::PlusAsin: return "SVD+asin";
    case AngleExtractionMethod::MinusAsin: return "SVD-asin";
    case AngleExtractionMethod::AveragedAsin: return "SVD+-asin";
  }
  return "SVD+-";
}

inline std::optional<AngleExtractionMethod> parse_angle_method(std::string_view token) {
  for (auto m : kAllAngleMethods) {
    if (to_token(m) == token) return m;
  }
  return std::nullopt;
}

namespace detail {
inline double checked_asin(double v) {
  if (!(v >= -1.0 && v <= 1.0)) {
    throw Error(ErrorKind::EntryOutOfRange, "asin argument outside [-1, 1]; rotation matrix is corrupt");
  }
  return std::asin(v);
}
}  // namespace detail

/// Reads (dphi_x, dphi_y, dphi_z) from R = I + [dphi]x + O(dphi^2).
inline Vec3 extract_angles(const Mat3& r, AngleExtractionMethod method) {
  const Vec3 plus(r(2, 1), r(0, 2), r(1, 0));
  const Vec3 minus(-r(1, 2), -r(2, 0), -r(0, 1));
  switch (method) {
    case AngleExtractionMethod::PlusEntries: return plus;
    case AngleExtractionMethod::MinusEntries: return minus;
    case AngleExtractionMethod::Averaged: return (plus + minus) / 2.0;
    case AngleExtractionMethod::PlusAsin: return plus.unaryExpr(&detail::checked_asin);
    case AngleExtractionMethod::MinusAsin:
      // -asin(r23) == asin(-r23)
      return minus.unaryExpr(&detail::checked_asin);
    case AngleExtractionMethod::AveragedAsin:
      return ((plus + minus) / 2.0).unaryExpr(&detail::checked_asin);
  }
  return (plus + minus) / 2.0;
}

}  // namespace stiffid
