#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dzid/common.hpp"
#include "dzid/dynamics.hpp"

namespace dzid {

// Sum-of-sinusoids reference for one joint.
struct JointExcitation {
  int sinusoids = 5;
  double freq_min = 0.1;  // [Hz]
  double freq_max = 1.5;  // [Hz]
  double amp_min = 0.2;   // [rad]
  double amp_max = 0.6;   // [rad]
  double offset = 0.0;    // reference center [rad]
  std::uint64_t phase_seed = 0;
};

struct SimConfig {
  double timestep = 0.002;  // 500 Hz control and log period
  int substeps = 10;        // integrator steps per control period
  double duration = 180.0;  // [s]
  std::uint64_t seed = 1;
  std::array<JointExcitation, kJoints> excitation{};
  Vec3 kp = Vec3::Zero();  // [N m/rad]
  Vec3 kd = Vec3::Zero();  // [N m s/rad]

  static SimConfig defaults();
  // Throws InvalidInput. Excitation must stay below the 25 Hz output Nyquist.
  void validate() const;
  std::size_t steps() const;
};

class SimulationDiverged : public NumericalError {
 public:
  SimulationDiverged(std::size_t step, double speed);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

inline constexpr double kDivergenceSpeed = 50.0;  // [rad/s]

// Raw simulator output, one row per integration step.
struct TrajectoryLog {
  double timestep = 0.002;
  std::vector<double> t;
  std::vector<Vec3> q;
  std::vector<Vec3> dq;
  std::vector<Vec3> tau;

  std::size_t size() const { return t.size(); }
};

// Reference trajectory: angle and rate per joint at time t.
class ExcitationReference {
 public:
  ExcitationReference(const SimConfig& config);
  Vec3 angle(double t) const;
  Vec3 rate(double t) const;

 private:
  struct Component {
    double amp, omega, phase;
  };
  std::array<std::vector<Component>, kJoints> parts_;
  Vec3 offset_;
};

// Integrates the arm under PD tracking of the excitation reference. The arm
// starts at rest on the reference. Deterministic for a fixed config.
TrajectoryLog simulate_trajectory(const SimConfig& config, const LinkParams& params);

void write_trajectory_csv(const TrajectoryLog& log, const std::string& path);
TrajectoryLog read_trajectory_csv(const std::string& path);

// Config files hold both LinkParams and SimConfig keys (see README).
LinkParams link_params_from(const KeyValueFile& kv, const LinkParams& base = LinkParams::defaults());
SimConfig sim_config_from(const KeyValueFile& kv, const SimConfig& base = SimConfig::defaults());
void store_link_params(const LinkParams& params, KeyValueFile& kv);
void store_sim_config(const SimConfig& config, KeyValueFile& kv);

}  // namespace dzid
