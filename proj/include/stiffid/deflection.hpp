#pragma once

// Rigid-transform fitting of a displacement field: the exact Procrustes (SVD)
// solution, the linearized LIN solution and the diagonal closed form for
// symmetric sensors.
//
// All estimators report the deflection at the reference point, i.e. at the
// origin of the centered field, so that fields whose centroid is off the
// reference point still produce columns in one common frame.

#include "stiffid/common.hpp"
#include "stiffid/field.hpp"
#include "stiffid/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stiffid {

/// Rotations above this magnitude (1 deg) are outside the range where the
/// small-angle model is accurate to better than ~0.01 deg.
inline constexpr double kLinearizationLimit = 0.0175;  // rad

struct Deflection {
  Vec3 translation = Vec3::Zero();  // mm
  Vec3 rotation = Vec3::Zero();     // rad

  Vec6 as_vector() const {
    Vec6 v;
    v << translation, rotation;
    return v;
  }
  static Deflection from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }

  bool finite() const { return translation.allFinite() && rotation.allFinite(); }
  bool within_linear_range() const { return rotation.cwiseAbs().maxCoeff() < kLinearizationLimit; }
};

struct FitResult {
  Deflection deflection;
  std::vector<Vec3> residuals;  // per node, input order
  double objective = 0.0;       // sum of squared residuals, mm^2
  std::optional<Mat3> rotation_matrix;  // set by the SVD estimator only

  std::size_t node_count() const noexcept { return residuals.size(); }
};

enum class Estimator { Lin, Svd };

constexpr std::string_view to_token(Estimator e) { return e == Estimator::Lin ? "lin" : "svd"; }

inline std::optional<Estimator> parse_estimator(std::string_view token) {
  if (token == "lin") return Estimator::Lin;
  if (token == "svd") return Estimator::Svd;
  return std::nullopt;
}

namespace detail {

inline void require_estimable(const DisplacementField& field) {
  if (!field.centered) throw Error(ErrorKind::NotCentered, "estimation requires a centered field");
  if (field.size() < 3) {
    throw Error(ErrorKind::DegenerateGeometry,
                "at least 3 nodes are needed, got " + std::to_string(field.size()));
  }
}

inline double sum_squares(const std::vector<Vec3>& residuals) {
  double f = 0.0;
  for (const auto& r : residuals) f += r.squaredNorm();
  return f;
}

inline Vec3 mean_displacement(const DisplacementField& field) {
  Vec3 sum = Vec3::Zero();
  for (const auto& node : field.nodes) sum += node.displacement;
  return sum / static_cast<double>(field.size());
}

}  // namespace detail

/// Sum over nodes of P^T P for positions taken relative to `origin`.
/// Equals tr(M) I - M where M is the second-moment matrix about `origin`.
inline Mat3 moment_matrix(const DisplacementField& field, const Vec3& origin) {
  Mat3 sum = Mat3::Zero();
  for (const auto& node : field.nodes) {
    const Mat3 block = node_design_block(node.position - origin);
    sum += block.transpose() * block;
  }
  return sum;
}

/// Throws DegenerateGeometry when the smallest eigenvalue of the moment
/// matrix falls below 1e-12 of its trace (collinear or coincident nodes).
inline void require_well_posed(const Mat3& moments) {
  const double trace = moments.trace();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(moments, Eigen::EigenvaluesOnly);
  if (!(trace > 0.0) || eig.eigenvalues().minCoeff() < 1e-12 * trace) {
    throw Error(ErrorKind::DegenerateGeometry,
                "node moment matrix is singular; rotation is unobservable (collinear nodes?)");
  }
}

/// Linearized fit: origin moved to the node centroid, where the translation
/// and rotation blocks of the normal equations decouple, then the translation
/// is carried back to the reference point.
inline FitResult estimate_lin(const DisplacementField& field) {
  detail::require_estimable(field);
  const Vec3 pc = centroid(field);
  const Mat3 moments = moment_matrix(field, pc);
  require_well_posed(moments);

  Vec3 rhs = Vec3::Zero();
  for (const auto& node : field.nodes) {
    rhs += node_design_block(node.position - pc).transpose() * node.displacement;
  }
  const Vec3 rotation = moments.ldlt().solve(rhs);
  const Vec3 centroid_translation = detail::mean_displacement(field);

  FitResult fit;
  fit.residuals.reserve(field.size());
  for (const auto& node : field.nodes) {
    fit.residuals.push_back(node.displacement - centroid_translation -
                            node_design_block(node.position - pc) * rotation);
  }
  fit.objective = detail::sum_squares(fit.residuals);
  // Displacement at the reference point: dp(0) = dp(pc) + dphi x (0 - pc).
  fit.deflection = {centroid_translation - rotation.cross(pc), rotation};
  return fit;
}

/// Exact least-squares rigid fit via the orthogonal Procrustes problem.
inline FitResult estimate_svd(const DisplacementField& field,
                              AngleExtractionMethod method = AngleExtractionMethod::Averaged) {
  detail::require_estimable(field);
  const auto n = static_cast<double>(field.size());

  Vec3 mean_initial = Vec3::Zero();
  Vec3 mean_final = Vec3::Zero();
  for (const auto& node : field.nodes) {
    mean_initial += node.position;
    mean_final += node.position + node.displacement;
  }
  mean_initial /= n;
  mean_final /= n;

  Mat3 cross_covariance = Mat3::Zero();
  for (const auto& node : field.nodes) {
    const Vec3 initial = node.position - mean_initial;
    const Vec3 final = node.position + node.displacement - mean_final;
    cross_covariance += initial * final.transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(cross_covariance, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorKind::DegenerateGeometry,
                "cross-covariance has rank < 2; rotation about the node line is unobservable");
  }
  Mat3 v = svd.matrixV();
  const Mat3& u = svd.matrixU();
  Mat3 rotation = v * u.transpose();
  if (rotation.determinant() < 0.0) {
    v.col(2) = -v.col(2);
    rotation = v * u.transpose();
  }

  FitResult fit;
  const Vec3 translation = mean_final - rotation * mean_initial;
  fit.residuals.reserve(field.size());
  for (const auto& node : field.nodes) {
    fit.residuals.push_back(node.position + node.displacement - rotation * node.position - translation);
  }
  fit.objective = detail::sum_squares(fit.residuals);
  fit.deflection = {translation, extract_angles(rotation, method)};
  fit.rotation_matrix = rotation;
  return fit;
}

/// Closed form for sensors whose centroid sits on the reference point and
/// whose moment matrix is diagonal: p is the mean displacement and each
/// rotation component is a scalar division.
inline FitResult estimate_symmetric(const DisplacementField& field) {
  detail::require_estimable(field);
  const Vec3 pc = centroid(field);
  double extent = 0.0;
  for (const auto& node : field.nodes) extent = std::max(extent, node.position.norm());
  const Mat3 moments = moment_matrix(field, pc);
  const double diag_max = moments.diagonal().maxCoeff();
  const Mat3 off = moments - Mat3(moments.diagonal().asDiagonal());
  if (pc.norm() > 1e-9 * extent || off.cwiseAbs().maxCoeff() > 1e-9 * diag_max) {
    throw Error(ErrorKind::NotSymmetric,
                "field is not symmetric about the reference point; use the general LIN estimator");
  }
  require_well_posed(moments);

  Vec3 rhs = Vec3::Zero();
  for (const auto& node : field.nodes) {
    rhs += node_design_block(node.position - pc).transpose() * node.displacement;
  }
  const Vec3 rotation = rhs.cwiseQuotient(moments.diagonal());
  const Vec3 centroid_translation = detail::mean_displacement(field);

  FitResult fit;
  fit.residuals.reserve(field.size());
  for (const auto& node : field.nodes) {
    fit.residuals.push_back(node.displacement - centroid_translation -
                            node_design_block(node.position - pc) * rotation);
  }
  fit.objective = detail::sum_squares(fit.residuals);
  fit.deflection = {centroid_translation - rotation.cross(pc), rotation};
  return fit;
}

inline FitResult estimate(const DisplacementField& field, Estimator estimator,
                          AngleExtractionMethod method = AngleExtractionMethod::Averaged) {
  return estimator == Estimator::Lin ? estimate_lin(field) : estimate_svd(field, method);
}

/// Linearized objective sum |dp_i - p - dphi x p_i|^2 at the reference point.
inline double lin_objective(const DisplacementField& field, const Deflection& d) {
  double f = 0.0;
  for (const auto& node : field.nodes) {
    f += (node.displacement - d.translation - d.rotation.cross(node.position)).squaredNorm();
  }
  return f;
}

/// Rigid-transform objective sum |p_i + dp_i - R p_i - p|^2.
inline double rigid_objective(const DisplacementField& field, const Mat3& rotation, const Vec3& translation) {
  double f = 0.0;
  for (const auto& node : field.nodes) {
    f += (node.position + node.displacement - rotation * node.position - translation).squaredNorm();
  }
  return f;
}

}  // namespace stiffid
