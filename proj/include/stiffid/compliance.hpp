#pragma once

// Assembly of the 6x6 compliance matrix from loading experiments.
//
// Column / row ordering is (x-force, y-force, z-force, x-torque, y-torque,
// z-torque) for wrenches and (px, py, pz, dphi_x, dphi_y, dphi_z) for
// deflections. Blocks carry units mm/N, mm/(N*mm), rad/N and rad/(N*mm).

#include "stiffid/common.hpp"
#include "stiffid/deflection.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stiffid {

struct Wrench {
  Vec3 force = Vec3::Zero();   // N
  Vec3 torque = Vec3::Zero();  // N*mm

  Vec6 as_vector() const {
    Vec6 v;
    v << force, torque;
    return v;
  }
  static Wrench from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
};

struct Experiment {
  Wrench wrench;
  Deflection deflection;
  std::string field_source;
};

struct ComplianceMatrix {
  Mat6 k = Mat6::Zero();
  std::optional<Mask6> significance_mask;  // true = significant
  bool symmetrized = false;
};

/// The six single-component loads, in column order.
inline std::array<Wrench, 6> canonical_wrench_scheme(double fx, double fy, double fz, double mx, double my,
                                                     double mz) {
  const std::array<double, 6> magnitudes{fx, fy, fz, mx, my, mz};
  std::array<Wrench, 6> out;
  for (int j = 0; j < 6; ++j) {
    if (magnitudes[j] == 0.0 || !std::isfinite(magnitudes[j])) {
      throw Error(ErrorKind::ZeroMagnitude, "canonical load component " + std::to_string(j) + " is zero");
    }
    Vec6 v = Vec6::Zero();
    v(j) = magnitudes[j];
    out[j] = Wrench::from_vector(v);
  }
  return out;
}

/// Index of the single nonzero component, if the wrench has exactly one.
inline std::optional<int> canonical_component(const Wrench& w) {
  const Vec6 v = w.as_vector();
  std::optional<int> found;
  for (int i = 0; i < 6; ++i) {
    if (v(i) != 0.0) {
      if (found) return std::nullopt;
      found = i;
    }
  }
  return found;
}

/// Column index per experiment when the set is a canonical scheme.
inline std::optional<std::array<int, 6>> canonical_columns(std::span<const Experiment> experiments) {
  if (experiments.size() != 6) return std::nullopt;
  std::array<int, 6> columns{};
  std::array<bool, 6> seen{};
  for (std::size_t e = 0; e < 6; ++e) {
    const auto c = canonical_component(experiments[e].wrench);
    if (!c || seen[*c]) return std::nullopt;
    seen[*c] = true;
    columns[e] = *c;
  }
  return columns;
}

/// Each experiment contributes one column: deflection / load magnitude.
inline ComplianceMatrix assemble_canonical(std::span<const Experiment> experiments) {
  if (experiments.size() < 6) {
    throw Error(ErrorKind::InsufficientExperiments,
                "insufficient experiments: " + std::to_string(experiments.size()) + " < 6");
  }
  const auto columns = canonical_columns(experiments);
  if (!columns) {
    throw Error(ErrorKind::NotCanonical,
                "wrenches must be six single-component loads covering every component once");
  }
  ComplianceMatrix out;
  for (std::size_t e = 0; e < 6; ++e) {
    const int j = (*columns)[e];
    const double magnitude = experiments[e].wrench.as_vector()(j);
    out.k.col(j) = experiments[e].deflection.as_vector() / magnitude;
  }
  return out;
}

/// Least-squares solution of k * W = D for m >= 6 experiments, where W and D
/// stack wrenches and deflections column-wise.
inline ComplianceMatrix assemble_overdetermined(std::span<const Experiment> experiments) {
  const auto m = static_cast<Eigen::Index>(experiments.size());
  if (m < 6) {
    throw Error(ErrorKind::InsufficientExperiments, "insufficient experiments: " + std::to_string(m) + " < 6");
  }
  Eigen::MatrixXd wrenches_t(m, 6);
  Eigen::MatrixXd deflections_t(m, 6);
  for (Eigen::Index e = 0; e < m; ++e) {
    wrenches_t.row(e) = experiments[e].wrench.as_vector().transpose();
    deflections_t.row(e) = experiments[e].deflection.as_vector().transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(wrenches_t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(5) <= 1e-12 * sv(0)) {
    throw Error(ErrorKind::RankDeficientWrenches,
                "wrench matrix has rank < 6; some compliance directions are unobservable");
  }
  ComplianceMatrix out;
  out.k = svd.solve(deflections_t).transpose();
  return out;
}

/// Canonical assembly when the wrenches allow it, least squares otherwise.
inline ComplianceMatrix assemble(std::span<const Experiment> experiments) {
  if (canonical_columns(experiments)) return assemble_canonical(experiments);
  return assemble_overdetermined(experiments);
}

inline ComplianceMatrix symmetrize(const ComplianceMatrix& in) {
  ComplianceMatrix out;
  out.k = (in.k + in.k.transpose()) / 2.0;
  if (in.significance_mask) {
    const Mask6& m = *in.significance_mask;
    out.significance_mask = Mask6(m.array() || m.transpose().array());
  }
  out.symmetrized = true;
  return out;
}

/// ||k - k^T||_F / ||k||_F, reported before symmetrization as a quality
/// diagnostic.
inline double relative_asymmetry(const Mat6& k) {
  const double norm = k.norm();
  return norm > 0.0 ? (k - k.transpose()).norm() / norm : 0.0;
}

/// Smallest eigenvalue of the symmetric part divided by its spectral norm.
inline double min_eigenvalue_ratio(const Mat6& k) {
  const Mat6 sym = (k + k.transpose()) / 2.0;
  const Eigen::SelfAdjointEigenSolver<Mat6> eig(sym, Eigen::EigenvaluesOnly);
  const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
  return scale > 0.0 ? eig.eigenvalues().minCoeff() / scale : 0.0;
}

/// Non-negative definiteness up to identification noise.
inline bool is_positive_semidefinite(const Mat6& k, double tol = 1e-9) {
  return min_eigenvalue_ratio(k) >= -tol;
}

/// Stiffness K = k^-1 through the eigen-decomposition of the symmetric part,
/// so the result is exactly symmetric.
inline Mat6 invert_to_stiffness(const ComplianceMatrix& compliance) {
  const Mat6 sym = (compliance.k + compliance.k.transpose()) / 2.0;
  const Eigen::SelfAdjointEigenSolver<Mat6> eig(sym);
  const auto& lambda = eig.eigenvalues();
  const double scale = lambda.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || lambda.minCoeff() <= 1e-12 * scale) {
    throw Error(ErrorKind::SingularCompliance,
                "compliance matrix is singular or indefinite; the body has an unconstrained mode");
  }
  const Mat6& v = eig.eigenvectors();
  Mat6 stiffness = v * lambda.cwiseInverse().asDiagonal() * v.transpose();
  return (stiffness + stiffness.transpose()) / 2.0;
}

}  // namespace stiffid
