#include "oracles.hpp"
#include "stiffid/compliance.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace stiffid;

namespace {

Mat6 random_spd(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat6 a;
  for (int i = 0; i < 36; ++i) a.data()[i] = n(rng);
  return a * a.transpose() + 0.5 * Mat6::Identity();
}

std::vector<Experiment> experiments_for(const Mat6& k, const std::vector<Wrench>& loads) {
  std::vector<Experiment> out;
  for (const auto& w : loads) out.push_back({w, Deflection::from_vector(k * w.as_vector()), ""});
  return out;
}

}  // namespace

TEST(CanonicalScheme, OneComponentPerLoad) {
  const auto loads = canonical_wrench_scheme(1000, 1, 1, 1000, 1000, 1000);
  for (int j = 0; j < 6; ++j) EXPECT_EQ(canonical_component(loads[static_cast<std::size_t>(j)]), j);
  EXPECT_THROW(canonical_wrench_scheme(1, 1, 0, 1, 1, 1), Error);
  EXPECT_FALSE(canonical_component(Wrench{Vec3(1, 1, 0), Vec3::Zero()}));
}

TEST(AssembleCanonical, ColumnsAreScaledDeflections) {
  const Mat6 truth = oracle::cantilever(1000, 10, 2e5, 0.266);
  const auto loads = canonical_wrench_scheme(1000, 1, 1, 1000, 1000, 1000);
  auto exps = experiments_for(truth, {loads.begin(), loads.end()});
  std::swap(exps[0], exps[4]);  // experiment order does not matter
  const auto k = assemble_canonical(exps);
  EXPECT_LT(((k.k - truth).array() / truth.cwiseAbs().array().max(1e-30)).abs().maxCoeff(), 1e-15);
}

TEST(AssembleCanonical, RequiresSixExperiments) {
  const auto loads = canonical_wrench_scheme(1, 1, 1, 1, 1, 1);
  const auto exps = experiments_for(Mat6::Identity(), {loads.begin(), loads.begin() + 5});
  try {
    assemble(exps);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientExperiments);
    EXPECT_NE(std::string(e.what()).find("insufficient experiments"), std::string::npos);
  }
}

TEST(AssembleOverdetermined, RecoversFromGeneralWrenches) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const Mat6 truth = random_spd(rng);
    std::vector<Wrench> loads;
    for (int e = 0; e < 9; ++e) loads.push_back({Vec3(n(rng), n(rng), n(rng)), Vec3(n(rng), n(rng), n(rng))});
    const auto k = assemble(experiments_for(truth, loads));
    EXPECT_LT((k.k - truth).cwiseAbs().maxCoeff(), 1e-10 * truth.cwiseAbs().maxCoeff());
  }
}

TEST(AssembleOverdetermined, RankDeficientWrenches) {
  std::vector<Wrench> loads;
  for (int e = 0; e < 7; ++e) loads.push_back({Vec3(e + 1.0, 2.0 * (e + 1), 0), Vec3(0, 0, e % 2)});
  try {
    assemble(experiments_for(Mat6::Identity(), loads));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankDeficientWrenches);
  }
}

// Canonical and least-squares assembly agree on canonical data.
TEST(AssembleProperty, CanonicalEqualsLeastSquares) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> mag(0.5, 1000.0);
  for (int t = 0; t < 30; ++t) {
    const Mat6 truth = random_spd(rng);
    const auto loads = canonical_wrench_scheme(mag(rng), mag(rng), mag(rng), mag(rng), mag(rng), mag(rng));
    const auto exps = experiments_for(truth, {loads.begin(), loads.end()});
    const Mat6 a = assemble_canonical(exps).k;
    const Mat6 b = assemble_overdetermined(exps).k;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9 * a.cwiseAbs().maxCoeff());
  }
}

TEST(Symmetrize, AveragesAndOrsMask) {
  ComplianceMatrix c;
  c.k(0, 1) = 2.0;
  c.k(1, 0) = 4.0;
  Mask6 m = Mask6::Constant(false);
  m(0, 1) = true;
  c.significance_mask = m;
  const auto s = symmetrize(c);
  EXPECT_DOUBLE_EQ(s.k(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(s.k(1, 0), 3.0);
  EXPECT_TRUE((*s.significance_mask)(1, 0));
  EXPECT_TRUE(s.symmetrized);
  EXPECT_EQ(relative_asymmetry(s.k), 0.0);
  EXPECT_GT(relative_asymmetry(c.k), 0.0);
}

TEST(Stiffness, InverseOfBeamCompliance) {
  ComplianceMatrix c;
  c.k = oracle::cantilever(1000, 10, 2e5, 0.266);
  const Mat6 stiff = invert_to_stiffness(c);
  EXPECT_LT((stiff * c.k - Mat6::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_TRUE(is_positive_semidefinite(c.k));
}

TEST(Stiffness, SingularComplianceThrows) {
  ComplianceMatrix c;
  c.k = Mat6::Identity();
  c.k(3, 3) = 0.0;
  try {
    invert_to_stiffness(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularCompliance);
  }
}
