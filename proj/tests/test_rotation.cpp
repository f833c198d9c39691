#include "stiffid/rotation.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace stiffid;

TEST(Skew, MatchesCrossProduct) {
  const Vec3 a(1, -2, 3), b(0.5, 4, -1);
  EXPECT_TRUE((skew(a) * b).isApprox(a.cross(b)));
}

TEST(NodeDesignBlock, ReproducesDifferentialRotation) {
  const Vec3 q(3, -1, 2), dphi(1e-3, -2e-3, 5e-4);
  EXPECT_TRUE((node_design_block(q) * dphi).isApprox(dphi.cross(q)));
}

TEST(ComposedRotation, OrderIsXThenYThenZ) {
  const Vec3 a(0.1, -0.2, 0.3);
  const Mat3 expected = Eigen::AngleAxisd(a.x(), Vec3::UnitX()).toRotationMatrix() *
                        Eigen::AngleAxisd(a.y(), Vec3::UnitY()).toRotationMatrix() *
                        Eigen::AngleAxisd(a.z(), Vec3::UnitZ()).toRotationMatrix();
  EXPECT_TRUE(composed_rotation(a).isApprox(expected, 1e-15));
  EXPECT_TRUE(is_rotation(composed_rotation(a)));
}

TEST(ExtractAngles, ExactForSingleAxisRotations) {
  for (double a : {1e-4, 0.01, 0.1}) {
    const Vec3 got = extract_angles(rotation_z(a), AngleExtractionMethod::AveragedAsin);
    EXPECT_NEAR(got.z(), a, 1e-15);
    EXPECT_NEAR(got.x(), 0.0, 1e-15);
  }
}

TEST(ExtractAngles, OutOfRangeEntryThrows) {
  Mat3 m = Mat3::Identity();
  m(2, 1) = 1.5;
  try {
    extract_angles(m, AngleExtractionMethod::PlusAsin);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EntryOutOfRange);
  }
}

TEST(AngleMethodTokens, RoundTrip) {
  for (auto m : kAllAngleMethods) EXPECT_EQ(parse_angle_method(to_token(m)), m);
  EXPECT_FALSE(parse_angle_method("bogus"));
}

// Extraction error of a small composed rotation is second order in its size.
TEST(ExtractAnglesProperty, ErrorIsSecondOrder) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a = Vec3(u(rng), u(rng), u(rng)) * 1e-2;
    const Mat3 r = composed_rotation(a);
    for (auto m : kAllAngleMethods) EXPECT_LE((extract_angles(r, m) - a).norm(), a.squaredNorm());
  }
}

TEST(ExtractAngles, AveragedNoWorseOnDiagonalRotations) {
  for (double b : {1e-4, 1e-3, 1e-2, 0.1}) {
    const Vec3 a = Vec3::Constant(b);
    const Mat3 r = composed_rotation(a);
    const double avg = (extract_angles(r, AngleExtractionMethod::Averaged) - a).cwiseAbs().maxCoeff();
    const double plus = (extract_angles(r, AngleExtractionMethod::PlusEntries) - a).cwiseAbs().maxCoeff();
    EXPECT_LE(avg, plus);
  }
}
