#include <cmath>

#include <gtest/gtest.h>

#include "dzid/simulator.hpp"
#include "test_util.hpp"

namespace dzid {
namespace {

SimConfig short_config(double duration = 4.0) {
  SimConfig c = SimConfig::defaults();
  c.duration = duration;
  return c;
}

TEST(Simulator, DefaultRecordLength) {
  const TrajectoryLog log = simulate_trajectory(SimConfig::defaults(), LinkParams::defaults());
  EXPECT_EQ(log.size(), 90000u);  // 180 s at 500 Hz
  EXPECT_DOUBLE_EQ(log.timestep, 0.002);
  EXPECT_DOUBLE_EQ(log.t.back(), 89999 * 0.002);
}

TEST(Simulator, SameSeedIsBitIdentical) {
  const auto a = simulate_trajectory(short_config(), LinkParams::defaults());
  const auto b = simulate_trajectory(short_config(), LinkParams::defaults());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a.q[k], b.q[k]);
    ASSERT_EQ(a.dq[k], b.dq[k]);
    ASSERT_EQ(a.tau[k], b.tau[k]);
  }
  SimConfig other = short_config();
  other.seed = 2;
  const auto c = simulate_trajectory(other, LinkParams::defaults());
  EXPECT_NE(a.q.back(), c.q.back());
}

TEST(Simulator, ZeroAmplitudeWithoutGravityStaysPut) {
  SimConfig c = short_config();
  for (auto& e : c.excitation) {
    e.amp_min = e.amp_max = 0.0;
    e.offset = 0.3;
  }
  LinkParams p = LinkParams::defaults();
  p.gravity = 0.0;
  const auto log = simulate_trajectory(c, p);
  for (std::size_t k = 0; k < log.size(); ++k) {
    ASSERT_EQ(log.q[k], Vec3::Constant(0.3));
    ASSERT_EQ(log.dq[k], Vec3::Zero());
  }
}

TEST(Simulator, TrackingErrorIsSmallWithoutFriction) {
  const SimConfig c = short_config(20.0);
  const auto log = simulate_trajectory(c, LinkParams::defaults().frictionless());
  const ExcitationReference ref(c);
  Vec3 sq = Vec3::Zero();
  for (std::size_t k = 0; k < log.size(); ++k) sq += (ref.angle(log.t[k]) - log.q[k]).cwiseAbs2();
  const Vec3 rms = (sq / static_cast<double>(log.size())).cwiseSqrt();
  EXPECT_LT(rms.maxCoeff(), 0.1) << rms.transpose();
}

TEST(Simulator, ReferenceRateIsDerivativeOfAngle) {
  const ExcitationReference ref(SimConfig::defaults());
  const double h = 1e-6;
  for (double t : {0.0, 1.3, 17.9, 120.0}) {
    const Vec3 fd = (ref.angle(t + h) - ref.angle(t - h)) / (2 * h);
    EXPECT_LT((fd - ref.rate(t)).cwiseAbs().maxCoeff(), 1e-6);
  }
  EXPECT_LT(ref.angle(0.0).norm(), 1e-15);
}

TEST(Simulator, DivergenceIsReported) {
  SimConfig c = short_config(1.0);
  c.kp = Vec3::Constant(1e6);
  c.kd = Vec3::Zero();
  EXPECT_THROW(simulate_trajectory(c, LinkParams::defaults().frictionless()), SimulationDiverged);
}

TEST(Simulator, ConfigValidation) {
  SimConfig c = SimConfig::defaults();
  c.substeps = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = SimConfig::defaults();
  c.excitation[1].freq_max = 30.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = SimConfig::defaults();
  c.kd[0] = -1.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = SimConfig::defaults();
  c.duration = 0.0;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Simulator, CsvRoundTripIsExact) {
  testing::TempDir dir;
  const auto log = simulate_trajectory(short_config(1.0), LinkParams::defaults());
  write_trajectory_csv(log, dir.file("traj.csv"));
  const std::string text = testing::slurp(dir.file("traj.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,q0,q1,q2,dq0,dq1,dq2,tau0,tau1,tau2");
  const auto back = read_trajectory_csv(dir.file("traj.csv"));
  ASSERT_EQ(back.size(), log.size());
  EXPECT_DOUBLE_EQ(back.timestep, log.timestep);
  for (std::size_t k = 0; k < log.size(); ++k) {
    ASSERT_EQ(back.t[k], log.t[k]);
    ASSERT_EQ(back.q[k], log.q[k]);
    ASSERT_EQ(back.dq[k], log.dq[k]);
    ASSERT_EQ(back.tau[k], log.tau[k]);
  }
}

TEST(Simulator, ConfigFileRoundTrip) {
  SimConfig c = SimConfig::defaults();
  c.seed = 99;
  c.excitation[2].amp_max = 0.45;
  LinkParams p = LinkParams::defaults();
  p.joints[1].static_level = 7.5;
  KeyValueFile kv;
  store_sim_config(c, kv);
  store_link_params(p, kv);
  const auto parsed = KeyValueFile::parse(kv.serialize());
  const SimConfig c2 = sim_config_from(parsed);
  const LinkParams p2 = link_params_from(parsed);
  EXPECT_EQ(c2.seed, 99u);
  EXPECT_EQ(c2.substeps, c.substeps);
  EXPECT_EQ(c2.excitation[2].amp_max, 0.45);
  EXPECT_EQ(p2.joints[1].static_level, 7.5);
  EXPECT_EQ(full_parameter_vector(p2), full_parameter_vector(p));
}

TEST(Simulator, BadConfigValuesAreUsageErrors) {
  EXPECT_THROW(sim_config_from(KeyValueFile::parse("sim.duration = -1\n")), UsageError);
  EXPECT_THROW(sim_config_from(KeyValueFile::parse("sim.seed = abc\n")), UsageError);
  EXPECT_THROW(link_params_from(KeyValueFile::parse("link1.mass = -2\n")), UsageError);
}

}  // namespace
}  // namespace dzid
