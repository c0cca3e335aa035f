#include <algorithm>
#include <cmath>
#include <complex>
#include <set>

#include <gtest/gtest.h>

#include "dzid/signal.hpp"
#include "test_util.hpp"

namespace dzid {
namespace {

constexpr double kDt = 0.002;
constexpr double kCut = 25.0;

std::vector<double> sampled(std::size_t n, const auto& f) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = f(static_cast<double>(k) * kDt);
  return x;
}

// Peak of the last `tail` samples.
double tail_peak(const std::vector<double>& y, std::size_t tail) {
  double m = 0.0;
  for (std::size_t k = y.size() - tail; k < y.size(); ++k) m = std::max(m, std::abs(y[k]));
  return m;
}

TEST(Lowpass, ConstantPassesUnchanged) {
  const std::vector<double> x(500, 2.75);
  for (double v : lowpass(x, kCut, kDt)) EXPECT_EQ(v, 2.75);
}

TEST(Lowpass, StepReaches63PercentAfterOneTimeConstant) {
  std::vector<double> x(200, 1.0);
  x[0] = 0.0;
  const auto y = lowpass(x, kCut, kDt);
  for (std::size_t k = 1; k < y.size(); ++k) ASSERT_GE(y[k], y[k - 1]);
  const auto hit = std::find_if(y.begin(), y.end(), [](double v) { return v >= 1.0 - std::exp(-1.0); });
  // 40 ms is 20 samples; allow one sample either way.
  EXPECT_LE(std::abs((hit - y.begin()) - 20), 1);
}

TEST(Lowpass, MinusThreeDecibelsAtCutoff) {
  // The discrete section reaches -3 dB at the cutoff only up to warping; the
  // analytic gain of the backward-Euler section is used as the oracle.
  const double w = kCut;
  const auto y = lowpass(sampled(20000, [&](double t) { return std::sin(w * t); }), kCut, kDt);
  const double gain_db = 20.0 * std::log10(tail_peak(y, 2000));
  EXPECT_NEAR(gain_db, -3.0103, 0.2);
  const double a = kDt * kCut / (1.0 + kDt * kCut);
  const std::complex<double> z = std::polar(1.0, w * kDt);
  const double analytic = std::abs(a / (1.0 - (1.0 - a) / z));
  EXPECT_NEAR(tail_peak(y, 2000), analytic, 2e-4);
}

TEST(Lowpass, IsLinear) {
  Rng r(1);
  std::vector<double> x(1000), y(1000), mix(1000);
  const double a = 1.7, b = -0.4;
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = r.normal();
    y[k] = r.normal();
    mix[k] = a * x[k] + b * y[k];
  }
  const auto fx = lowpass(x, kCut, kDt), fy = lowpass(y, kCut, kDt), fm = lowpass(mix, kCut, kDt);
  const auto dx = pseudo_diff(x, kCut, kDt), dy = pseudo_diff(y, kCut, kDt), dm = pseudo_diff(mix, kCut, kDt);
  for (std::size_t k = 0; k < x.size(); ++k) {
    EXPECT_NEAR(fm[k], a * fx[k] + b * fy[k], 1e-12);
    EXPECT_NEAR(dm[k], a * dx[k] + b * dy[k], 1e-11);
  }
}

TEST(Lowpass, RejectsBadArguments) {
  const std::vector<double> x(10, 0.0);
  EXPECT_THROW(lowpass(std::vector<double>{}, kCut, kDt), InvalidInput);
  EXPECT_THROW(lowpass(x, 0.0, kDt), InvalidInput);
  EXPECT_THROW(lowpass(x, kCut, 0.0), InvalidInput);
  EXPECT_THROW(lowpass(x, 1000.0, kDt), InvalidInput);
}

TEST(PseudoDiff, ConstantGivesZero) {
  const auto y = pseudo_diff(std::vector<double>(300, -4.0), kCut, kDt);
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(PseudoDiff, RampSettlesOnSlope) {
  const double slope = 3.2;
  const auto y = pseudo_diff(sampled(1000, [&](double t) { return slope * t; }), kCut, kDt);
  // Five time constants after the start.
  const auto k = static_cast<std::size_t>(std::ceil(5.0 / kCut / kDt));
  EXPECT_LT(std::abs(y[k] - slope) / slope, 1e-2);
  EXPECT_LT(std::abs(y.back() - slope) / slope, 1e-3);
}

TEST(PseudoDiff, SlowSineMatchesTransferFunction) {
  const double w0 = 2.0, amp = 0.7;
  const auto y = pseudo_diff(sampled(40000, [&](double t) { return amp * std::sin(w0 * t); }), kCut, kDt);
  // |H| of w(1 - lowpass) in continuous time: w0 / sqrt(1 + (w0/wc)^2).
  const double expect = amp * w0 / std::sqrt(1.0 + (w0 / kCut) * (w0 / kCut));
  EXPECT_NEAR(tail_peak(y, 5000), expect, 2e-3 * expect);
}

TrajectoryLog constant_log(std::size_t n, const Vec3& q) {
  TrajectoryLog log;
  for (std::size_t k = 0; k < n; ++k) {
    log.t.push_back(static_cast<double>(k) * kDt);
    log.q.push_back(q);
    log.dq.push_back(Vec3::Zero());
    log.tau.push_back(Vec3(1, 2, 3));
  }
  return log;
}

TEST(BuildDataset, DecimatesTenToOne) {
  const Dataset ds = build_dataset(constant_log(90000, Vec3(0.1, 0.2, 0.3)));
  EXPECT_EQ(ds.size(), 9000u);
  EXPECT_EQ(ds.rate_hz, 50.0);
  EXPECT_EQ(ds.warmup, 100u);
  EXPECT_EQ(build_dataset(constant_log(1234, Vec3::Zero())).size(), 123u);
}

TEST(BuildDataset, ConstantAnglesGiveZeroRates) {
  const Dataset ds = build_dataset(constant_log(5000, Vec3(0.1, -0.2, 0.3)));
  for (const auto& s : ds.samples) {
    EXPECT_LT(s.dq.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(s.ddq.cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((s.tau - Vec3(1, 2, 3)).norm(), 1e-12);
  }
}

TEST(BuildDataset, DefaultFilterSettings) {
  const FilterConfig f;
  EXPECT_EQ(f.cutoff, 25.0);
  EXPECT_EQ(f.output_rate, 50.0);
  EXPECT_EQ(f.angle_passes, 2);
  EXPECT_EQ(f.velocity_passes, 1);
  EXPECT_EQ(f.torque_passes, 2);
}

// Slow frictionless motion: filtered torque against inverse dynamics of the
// filtered kinematics. Products of filtered signals differ from filtered
// products, so the check is restricted to motion well below the cutoff.
TEST(BuildDataset, ConsistentWithInverseDynamicsOnSlowMotion) {
  SimConfig c = SimConfig::defaults();
  c.duration = 30.0;
  for (auto& e : c.excitation) {
    e.freq_min = 0.05;
    e.freq_max = 0.5;
  }
  const LinkParams p = LinkParams::defaults().frictionless();
  const Dataset ds = build_dataset(simulate_trajectory(c, p)).after_warmup();
  Vec3 err = Vec3::Zero(), ref = Vec3::Zero();
  for (const auto& s : ds.samples) {
    err += (s.tau - ideal_inverse_dynamics(s.q, s.dq, s.ddq, p)).cwiseAbs2();
    ref += s.tau.cwiseAbs2();
  }
  const Vec3 rel = (err.array() / ref.array()).sqrt();
  EXPECT_LT(rel.maxCoeff(), 0.05) << rel.transpose();
}

TEST(BuildDataset, IsDeterministic) {
  SimConfig c = SimConfig::defaults();
  c.duration = 5.0;
  const auto log = simulate_trajectory(c, LinkParams::defaults());
  const Dataset a = build_dataset(log), b = build_dataset(log);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].q, b[i].q);
    ASSERT_EQ(a[i].ddq, b[i].ddq);
    ASSERT_EQ(a[i].tau, b[i].tau);
  }
}

Dataset random_dataset(std::size_t n, std::uint64_t seed, std::size_t warmup = 100) {
  Rng r(seed);
  Dataset ds;
  ds.warmup = warmup;
  ds.samples.resize(n);
  for (auto& s : ds.samples) {
    for (int j = 0; j < kJoints; ++j) {
      s.q[j] = r.normal();
      s.dq[j] = r.normal();
      s.ddq[j] = r.normal() * 5;
      s.tau[j] = r.normal();
    }
  }
  return ds;
}

TEST(Split, CountsDisjointAndMovingHoldout) {
  const Dataset ds = random_dataset(9000, 2);
  const DeadZoneMask mask = compute_mask(ds, joint_sigma(ds), MaskConfig{0.5});
  const Split s = split_dataset(ds, mask, 3);
  EXPECT_EQ(s.train.size(), 6000u);
  EXPECT_EQ(s.val.size(), 500u);
  EXPECT_EQ(s.test.size(), 500u);
  EXPECT_EQ(s.segment_size, 150u);
  std::set<std::size_t> seen;
  const auto seg = s.segment_indices();
  for (const auto* part : {&s.train, &s.val, &s.test, &seg}) {
    for (std::size_t i : *part) {
      EXPECT_TRUE(seen.insert(i).second) << "index " << i << " used twice";
      EXPECT_GE(i, ds.warmup);
      EXPECT_LT(i, ds.size());
    }
  }
  for (std::size_t i : s.val) EXPECT_TRUE(mask.all_moving(i));
  for (std::size_t i : s.test) EXPECT_TRUE(mask.all_moving(i));
}

TEST(Split, SameSeedSameSplit) {
  const Dataset ds = random_dataset(9000, 4);
  const DeadZoneMask mask = DeadZoneMask::ones(ds.size());
  const Split a = split_dataset(ds, mask, 5), b = split_dataset(ds, mask, 5);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.segment_begin, b.segment_begin);
  EXPECT_NE(split_dataset(ds, mask, 6).train, a.train);
}

TEST(Split, TooFewRowsIsDataError) {
  const Dataset ds = random_dataset(7000, 5);
  EXPECT_THROW(split_dataset(ds, DeadZoneMask::ones(ds.size()), 1), DataError);
  DeadZoneMask none = DeadZoneMask::ones(9000);
  none.r.setZero();
  EXPECT_THROW(split_dataset(random_dataset(9000, 6), none, 1), DataError);
  EXPECT_THROW(split_dataset(random_dataset(9000, 6), DeadZoneMask::ones(10), 1), InvalidInput);
}

TEST(Subsample, FullSizeIsPermutation) {
  const Dataset ds = random_dataset(600, 7, 0);
  std::vector<std::size_t> picked;
  const Dataset sub = subsample(ds, ds.size(), 8, &picked);
  EXPECT_EQ(sub.size(), ds.size());
  std::vector<std::size_t> sorted = picked;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Subsample, DistinctAndDeterministic) {
  const Dataset ds = random_dataset(6000, 9, 0);
  std::vector<std::size_t> a, b;
  subsample(ds, 300, 10, &a);
  subsample(ds, 300, 10, &b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 300u);
  const Dataset sub = subsample(ds, 300, 10);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(sub[i].tau, ds[a[i]].tau);
  EXPECT_THROW(subsample(ds, 0, 1), InvalidInput);
  EXPECT_THROW(subsample(ds, 6001, 1), InvalidInput);
}

TEST(Scaler, StandardizesAndInverts) {
  Dataset ds = random_dataset(2000, 11, 0);
  for (auto& s : ds.samples) s.q[1] = 3.0 + 10.0 * s.q[1];
  const Scaler sc = Scaler::fit(ds);
  const Eigen::MatrixXd z = sc.transform(ds);
  for (int c = 0; c < kInputs; ++c) {
    const double mean = z.col(c).mean();
    const double sd = std::sqrt((z.col(c).array() - mean).square().mean());
    EXPECT_LT(std::abs(mean), 1e-10);
    EXPECT_NEAR(sd, 1.0, 1e-10);
  }
  const Eigen::MatrixXd x = input_matrix(ds);
  EXPECT_LT((sc.inverse(z) - x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT((sc.transform(z) - z).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Scaler, ConstantChannelPassesThrough) {
  Dataset ds = random_dataset(100, 12, 0);
  for (auto& s : ds.samples) s.ddq[2] = 4.0;
  const Scaler sc = Scaler::fit(ds);
  const Eigen::MatrixXd z = sc.transform(ds);
  for (Eigen::Index i = 0; i < z.rows(); ++i) EXPECT_EQ(z(i, 8), 4.0);
}

TEST(Scaler, SaveLoadRoundTrip) {
  testing::TempDir dir;
  const Scaler sc = Scaler::fit(random_dataset(300, 13, 0));
  sc.save(dir.file("scaler.txt"));
  const Scaler back = Scaler::load(dir.file("scaler.txt"));
  EXPECT_EQ(back.mean(), sc.mean());
  EXPECT_EQ(back.scale(), sc.scale());
}

TEST(Dataset, CsvRoundTripIsExact) {
  testing::TempDir dir;
  const Dataset ds = random_dataset(50, 14, 0);
  write_dataset_csv(ds, dir.file("ds.csv"));
  const std::string text = testing::slurp(dir.file("ds.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "q0,q1,q2,dq0,dq1,dq2,ddq0,ddq1,ddq2,tau0,tau1,tau2");
  const Dataset back = read_dataset_csv(dir.file("ds.csv"));
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back[i].q, ds[i].q);
    EXPECT_EQ(back[i].dq, ds[i].dq);
    EXPECT_EQ(back[i].ddq, ds[i].ddq);
    EXPECT_EQ(back[i].tau, ds[i].tau);
  }
}

}  // namespace
}  // namespace dzid
