#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the estimators under test.

#include "stiffid/common.hpp"
#include "stiffid/field.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

using stiffid::Mat3;
using stiffid::Mat6;
using stiffid::Vec3;
using stiffid::Vec6;

/// Linearized rigid fit by brute force: stacks the 3n x 6 system
/// dp_i = p + dphi x q_i and solves it with Householder QR.
inline Vec6 stacked_linear_fit(const stiffid::DisplacementField& f) {
  const auto n = static_cast<Eigen::Index>(f.size());
  Eigen::MatrixXd a(3 * n, 6);
  Eigen::VectorXd b(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3& q = f.nodes[static_cast<std::size_t>(i)].position;
    // dphi x q = -q x dphi
    Mat3 cross_q;
    cross_q << 0, -q.z(), q.y(), q.z(), 0, -q.x(), -q.y(), q.x(), 0;
    a.block<3, 3>(3 * i, 0) = Mat3::Identity();
    a.block<3, 3>(3 * i, 3) = -cross_q;
    b.segment<3>(3 * i) = f.nodes[static_cast<std::size_t>(i)].displacement;
  }
  return a.householderQr().solve(b);
}

/// Optimal rotation of the centred point sets by Horn's unit-quaternion
/// method (largest eigenvector of the 4x4 profile matrix).
inline Mat3 horn_rotation(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    ca += from[i];
    cb += to[i];
  }
  ca /= static_cast<double>(from.size());
  cb /= static_cast<double>(to.size());
  Mat3 s = Mat3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) s += (from[i] - ca) * (to[i] - cb).transpose();
  const double sxx = s(0, 0), sxy = s(0, 1), sxz = s(0, 2);
  const double syx = s(1, 0), syy = s(1, 1), syz = s(1, 2);
  const double szx = s(2, 0), szy = s(2, 1), szz = s(2, 2);
  Eigen::Matrix4d n;
  n << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(n);
  const Eigen::Vector4d q = eig.eigenvectors().col(3);
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).normalized().toRotationMatrix();
}

/// Textbook cantilever tip compliance written out term by term. Columns
/// are (Fx, Fy, Fz, Mx, My, Mz); the beam runs along +x.
inline Mat6 cantilever(double length, double side, double young, double poisson) {
  const double area = side * side;
  const double second_moment = std::pow(side, 4) / 12.0;
  const double torsion_constant = 0.1406 * std::pow(side, 4);
  const double shear_modulus = young / (2.0 * (1.0 + poisson));
  Mat6 k = Mat6::Zero();
  k(0, 0) = length / (young * area);
  k(1, 1) = std::pow(length, 3) / (3.0 * young * second_moment);
  k(2, 2) = k(1, 1);
  k(3, 3) = length / (shear_modulus * torsion_constant);
  k(4, 4) = length / (young * second_moment);
  k(5, 5) = k(4, 4);
  // +Fy bends the tip toward +y: rotation about +z. +Mz likewise moves it toward +y.
  k(1, 5) = std::pow(length, 2) / (2.0 * young * second_moment);
  k(5, 1) = k(1, 5);
  // +Fz bends toward +z: rotation about -y.
  k(2, 4) = -std::pow(length, 2) / (2.0 * young * second_moment);
  k(4, 2) = k(2, 4);
  return k;
}

/// Second moment sum over a centred grid computed by direct summation.
inline Mat3 moments_by_summation(const std::vector<Vec3>& points) {
  Mat3 d = Mat3::Zero();
  for (const auto& q : points) d += q.squaredNorm() * Mat3::Identity() - q * q.transpose();
  return d;
}

}  // namespace oracle
