#include <cmath>

#include <gtest/gtest.h>

#include "dzid/deadzone.hpp"
#include "test_util.hpp"

namespace dzid {
namespace {

Dataset with_rates(const std::vector<Vec3>& rates) {
  Dataset ds;
  for (const auto& v : rates) {
    Sample s;
    s.dq = v;
    ds.samples.push_back(s);
  }
  return ds;
}

Dataset random_rates(std::size_t n, std::uint64_t seed) {
  Rng r(seed);
  std::vector<Vec3> v(n);
  for (auto& x : v) x = Vec3(r.normal() * 2.0, r.normal() + 0.3, r.uniform(-4, 4));
  return with_rates(v);
}

TEST(Sigma, ZeroRatesGiveZero) {
  EXPECT_EQ(joint_sigma(with_rates(std::vector<Vec3>(20, Vec3::Zero()))), Vec3::Zero());
}

TEST(Sigma, AlternatingUnitRates) {
  std::vector<Vec3> v;
  for (int i = 0; i < 100; ++i) v.emplace_back(i % 2 ? 1.0 : -1.0, 0.0, 0.0);
  EXPECT_NEAR(joint_sigma(with_rates(v))[0], 1.0, 1e-15);
}

TEST(Sigma, MatchesTwoPassPopulationStd) {
  const Dataset ds = random_rates(5000, 1);
  const Vec3 sigma = joint_sigma(ds);
  for (int j = 0; j < kJoints; ++j) {
    double mean = 0.0;
    for (const auto& s : ds.samples) mean += s.dq[j];
    mean /= static_cast<double>(ds.size());
    double ss = 0.0;
    for (const auto& s : ds.samples) ss += (s.dq[j] - mean) * (s.dq[j] - mean);
    EXPECT_NEAR(sigma[j], std::sqrt(ss / static_cast<double>(ds.size())), 1e-12);
  }
}

TEST(Mask, BoundaryIsDead) {
  const Dataset ds = with_rates({Vec3(0.2, -0.2, 0.2000001), Vec3(0.0, 5.0, -0.1999)});
  const DeadZoneMask m = compute_mask(ds, Vec3(2.0, 2.0, 2.0), MaskConfig{0.1});
  EXPECT_EQ(m.r(0, 0), 0.0);
  EXPECT_EQ(m.r(0, 1), 0.0);
  EXPECT_EQ(m.r(0, 2), 1.0);
  EXPECT_EQ(m.r(1, 0), 0.0);
  EXPECT_EQ(m.r(1, 1), 1.0);
  EXPECT_EQ(m.r(1, 2), 0.0);
}

TEST(Mask, ZeroAlphaKeepsEveryMovingEntry) {
  const Dataset ds = with_rates({Vec3(1e-9, -3, 0), Vec3(0, 0, 2)});
  const DeadZoneMask m = compute_mask(ds, Vec3(1, 1, 1), MaskConfig{0.0});
  EXPECT_EQ(m.r.row(0), Eigen::RowVector3d(1, 1, 0));
  EXPECT_EQ(m.r.row(1), Eigen::RowVector3d(0, 0, 1));
}

TEST(Mask, DefaultAlpha) { EXPECT_EQ(MaskConfig{}.alpha, 0.1); }

TEST(Mask, AgreesWithBruteForce) {
  const Dataset ds = random_rates(1000, 2);
  const Vec3 sigma = joint_sigma(ds);
  const DeadZoneMask m = compute_mask(ds, sigma, MaskConfig{0.3});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < kJoints; ++j) {
      const double expect = std::abs(ds[i].dq[j]) <= 0.3 * sigma[j] ? 0.0 : 1.0;
      ASSERT_EQ(m.r(static_cast<Eigen::Index>(i), j), expect);
    }
  }
}

TEST(Mask, MonotoneInAlpha) {
  const Dataset ds = random_rates(2000, 3);
  const Vec3 sigma = joint_sigma(ds);
  DeadZoneMask prev = compute_mask(ds, sigma, MaskConfig{0.0});
  for (double alpha = 0.05; alpha < 2.0; alpha += 0.05) {
    const DeadZoneMask cur = compute_mask(ds, sigma, MaskConfig{alpha});
    EXPECT_TRUE((cur.r.array() <= prev.r.array()).all()) << "alpha " << alpha;
    prev = cur;
  }
}

TEST(Mask, ScalingOneJointScalesSigmaOnly) {
  Dataset ds = random_rates(1500, 4);
  const Vec3 s0 = joint_sigma(ds);
  const DeadZoneMask m0 = compute_mask(ds, s0, {});
  for (auto& s : ds.samples) s.dq[1] *= 3.5;
  const Vec3 s1 = joint_sigma(ds);
  EXPECT_NEAR(s1[1], 3.5 * s0[1], 1e-12);
  EXPECT_EQ(s1[0], s0[0]);
  EXPECT_EQ(compute_mask(ds, s1, {}).r, m0.r);
}

TEST(Mask, RejectsBadArguments) {
  const Dataset ds = random_rates(10, 5);
  EXPECT_THROW(compute_mask(ds, Vec3(1, -1, 1), {}), InvalidInput);
  EXPECT_THROW(compute_mask(ds, Vec3(1, 1, 1), MaskConfig{-0.1}), InvalidInput);
  EXPECT_THROW(joint_sigma(Dataset{}), InvalidInput);
}

TEST(MovingStats, HandBuiltMask) {
  DeadZoneMask m;
  m.r.resize(4, 3);
  m.r << 1, 1, 1, 0, 1, 1, 1, 0, 1, 1, 1, 0;
  const MovingStats s = moving_stats(m);
  EXPECT_EQ(s.per_joint, Vec3(0.75, 0.75, 0.75));
  EXPECT_EQ(s.all_moving, 0.25);
  EXPECT_EQ(s.all_moving_rows, 1u);
  EXPECT_EQ(s.rows, 4u);
}

TEST(MovingStats, AllOnes) {
  const MovingStats s = moving_stats(DeadZoneMask::ones(17));
  EXPECT_EQ(s.per_joint, Vec3(1, 1, 1));
  EXPECT_EQ(s.all_moving, 1.0);
}

// Independent joints each moving 70% of the time.
TEST(MovingStats, IndependentJointsMultiply) {
  Rng r(6);
  DeadZoneMask m;
  m.r.resize(6000, 3);
  for (Eigen::Index i = 0; i < m.r.rows(); ++i) {
    for (int j = 0; j < kJoints; ++j) m.r(i, j) = r.uniform() < 0.7 ? 1.0 : 0.0;
  }
  const MovingStats s = moving_stats(m);
  EXPECT_NEAR(s.all_moving, 0.343, 0.05);
  EXPECT_NEAR(s.all_moving, s.per_joint.prod(), 0.02);
}

TEST(Mask, SubsetAndCsvRoundTrip) {
  testing::TempDir dir;
  const Dataset ds = random_rates(200, 7);
  const DeadZoneMask m = compute_mask(ds, joint_sigma(ds), MaskConfig{0.5});
  write_mask_csv(m, dir.file("mask.csv"));
  const std::string text = testing::slurp(dir.file("mask.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "r0,r1,r2");
  const DeadZoneMask back = read_mask_csv(dir.file("mask.csv"), m.sigma);
  EXPECT_EQ(back.r, m.r);
  EXPECT_EQ(back.sigma, m.sigma);
  const DeadZoneMask sub = m.subset({5, 0, 7});
  EXPECT_EQ(sub.r.row(0), m.r.row(5));
  EXPECT_EQ(sub.r.row(2), m.r.row(7));
  EXPECT_THROW(m.subset({200}), InvalidInput);
}

}  // namespace
}  // namespace dzid
