#include "oracles.hpp"
#include "stiffid/statistics.hpp"
#include "stiffid/synthetic.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace stiffid;

TEST(DeflectionCovariance, CubicGridMoments) {
  const auto grid = generate_pattern(pattern::Cubic{});
  std::vector<Vec3> pts;
  for (const auto& n : grid.nodes) pts.push_back(n.position);
  const Mat3 d = oracle::moments_by_summation(pts);
  EXPECT_NEAR(d(0, 0), 26620.0, 1e-9);
  const auto cov = deflection_covariance(grid, 5e-5);
  EXPECT_NEAR(cov.std_devs()(0), 5e-5 / std::sqrt(1331.0), 1e-20);
  EXPECT_NEAR(cov.std_devs()(3), 5e-5 / std::sqrt(26620.0), 1e-20);
  // 1.37e-6 mm and 1.8e-5 deg at two significant figures
  EXPECT_NEAR(cov.std_devs()(0), 1.37e-6, 0.005e-6);
  EXPECT_NEAR(cov.std_devs()(3) * 180.0 / std::numbers::pi, 1.8e-5, 0.05e-5);
}

TEST(DeflectionCovariance, SquareGridIsAnisotropic) {
  const auto grid = generate_pattern(pattern::Square{10.0, 1.0, Axis::X});
  std::vector<Vec3> pts;
  for (const auto& n : grid.nodes) pts.push_back(n.position);
  const Mat3 d = oracle::moments_by_summation(pts);
  EXPECT_NEAR(d(0, 0), 2420.0, 1e-9);
  EXPECT_NEAR(d(1, 1), 1210.0, 1e-9);
  const auto cov = deflection_covariance(grid, 1.0);
  EXPECT_NEAR(cov.cov_rotation(0, 0), 1.0 / 2420.0, 1e-15);
  EXPECT_NEAR(cov.cov_rotation(2, 2), 1.0 / 1210.0, 1e-15);
}

TEST(EstimateSigma, PoolsDegreesOfFreedom) {
  FitResult a, b;
  a.residuals.assign(10, Vec3::Zero());
  a.objective = 24.0;  // dof 24
  b.residuals.assign(4, Vec3::Zero());
  b.objective = 0.0;  // dof 6
  const FitResult fits[] = {a, b};
  const auto s = estimate_sigma(fits);
  EXPECT_EQ(s.dof, 30);
  EXPECT_DOUBLE_EQ(s.sigma, std::sqrt(24.0 / 30.0));
  EXPECT_DOUBLE_EQ(s.per_experiment_sigma[0], 1.0);
}

TEST(EstimateSigma, TwoNodeFitHasNoDof) {
  FitResult a;
  a.residuals.assign(2, Vec3::Zero());
  const FitResult fits[] = {a};
  EXPECT_THROW(estimate_sigma(fits), Error);
}

TEST(OutlierCount, CeilWithRoundingGuard) {
  EXPECT_EQ(outlier_count(1210, 0.1), 121u);
  EXPECT_EQ(outlier_count(1331, 0.1), 134u);
  EXPECT_EQ(outlier_count(121, 0.1), 13u);
  EXPECT_EQ(outlier_count(100, 0.0), 0u);
}

TEST(OutlierIndices, TiesFavourLowerIndex) {
  FitResult fit;
  fit.residuals = {Vec3(1, 0, 0), Vec3(0, 0, 3), Vec3(0, -3, 0), Vec3(0.5, 0, 0), Vec3(2, 0, 0)};
  const auto idx = outlier_indices(fit, 0.2);  // ceil(1) = 1 node
  ASSERT_EQ(idx.size(), 1u);
  EXPECT_EQ(idx[0], 1u);
  const auto norm = outlier_indices(fit, 0.3, OutlierRanking::VectorNorm);  // 2 nodes
  EXPECT_EQ(norm, (std::vector<std::size_t>{1, 2}));
}

TEST(OutlierIndices, RejectsBadFractionAndTinyFields) {
  FitResult fit;
  fit.residuals.assign(3, Vec3::Ones());
  EXPECT_THROW(outlier_indices(fit, 1.0), Error);
  EXPECT_THROW(outlier_indices(fit, -0.1), Error);
  try {
    outlier_indices(fit, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewRemaining);
  }
}

// Filtering removes exactly ceil(f n) nodes, keeps order, and every kept
// node scores no higher than every dropped one.
TEST(FilterOutliersProperty, RemovesTheWorst) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    DisplacementField f;
    f.centered = true;
    FitResult fit;
    const int count = 20 + t;
    for (int i = 0; i < count; ++i) {
      f.nodes.push_back({Vec3(i, 0, 0), Vec3::Zero()});
      fit.residuals.push_back(Vec3(n(rng), n(rng), n(rng)));
    }
    const double frac = 0.05 + 0.01 * (t % 10);
    const auto kept = filter_outliers(f, fit, frac);
    ASSERT_EQ(kept.size(), f.size() - outlier_count(f.size(), frac));
    double kept_max = 0.0;
    for (std::size_t i = 1; i < kept.size(); ++i) ASSERT_LT(kept.nodes[i - 1].position.x(), kept.nodes[i].position.x());
    std::vector<bool> is_kept(f.size(), false);
    for (const auto& node : kept.nodes) is_kept[static_cast<std::size_t>(node.position.x())] = true;
    double dropped_min = 1e300;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double s = fit.residuals[i].cwiseAbs().maxCoeff();
      if (is_kept[i]) kept_max = std::max(kept_max, s);
      else dropped_min = std::min(dropped_min, s);
    }
    EXPECT_LE(kept_max, dropped_min);
  }
}

TEST(SignificanceTest, ZeroesElementsInsideInterval) {
  const auto loads = canonical_wrench_scheme(2, 2, 2, 2, 2, 2);
  std::vector<Experiment> exps;
  ComplianceMatrix k;
  k.k = Mat6::Identity() * 1e-3;
  k.k(0, 1) = 1e-9;
  for (int j = 0; j < 6; ++j) exps.push_back({loads[static_cast<std::size_t>(j)], {}, ""});
  DeflectionCovariance cov;
  cov.cov_translation = Mat3::Identity() * 1e-12;  // sd 1e-6
  cov.cov_rotation = Mat3::Identity() * 1e-12;
  const std::vector<DeflectionCovariance> covs(6, cov);
  const auto out = significance_test(k, exps, covs, 3.0);
  const auto& el = out.report.at(0, 1);
  EXPECT_DOUBLE_EQ(el.halfwidth, 1.5e-6);
  EXPECT_FALSE(el.significant);
  EXPECT_EQ(out.compliance.k(0, 1), 0.0);
  const auto& diag = out.report.at(0, 0);
  EXPECT_TRUE(diag.significant);
  EXPECT_NEAR(*diag.safety_factor, 1e-3 / 1.5e-6, 1e-9);
  EXPECT_NEAR(out.report.confidence_level, 0.9973, 1e-4);
}

TEST(SignificanceTest, NeedsCanonicalLoadsAndCovariances) {
  std::vector<Experiment> exps(6);
  for (auto& e : exps) e.wrench.force = Vec3(1, 1, 0);
  const std::vector<DeflectionCovariance> covs(6);
  EXPECT_THROW(significance_test({}, exps, covs), Error);
  const std::vector<DeflectionCovariance> none;
  try {
    significance_test({}, exps, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingCovariance);
  }
}
