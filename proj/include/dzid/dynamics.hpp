#pragma once

// Rigid-body model of a 3-DOF arm: a yawing turntable (joint 0) carrying two
// pitching links (joints 1 and 2) that move in a common vertical plane.
//
// Zero configuration is the arm pointing straight up. Positive pitch tilts the
// link away from vertical, so gravity torque vanishes at q = 0.
//
// All dynamics are evaluated by recursive Newton-Euler over origin-referenced
// inertial parameters (mass, first moment, inertia about the joint origin),
// which makes joint torque exactly linear in the parameter vector.

#include <array>
#include <vector>

#include "dzid/common.hpp"

namespace dzid {

struct Link {
  double mass = 0.0;     // [kg]
  double length = 0.0;   // [m]
  double com = 0.0;      // distance from joint origin to center of mass [m]
  double inertia = 0.0;  // rotational inertia about the joint axis [kg m^2]
};

struct JointFriction {
  double viscous = 0.0;         // [N m s/rad]
  double coulomb = 0.0;         // sliding level [N m]
  double static_level = 0.0;    // breakaway level [N m]
  double stick_velocity = 0.05; // [rad/s]
};

struct LinkParams {
  std::array<Link, kJoints> links{};
  std::array<JointFriction, kJoints> joints{};
  double gravity = 9.81;

  // Plausible desk-scale arm with static friction pre-tuned for the default
  // excitation (see calibrate_static_friction).
  static LinkParams defaults();

  // Throws InvalidInput naming the first violated invariant.
  void validate() const;

  // Copy with all friction terms removed (stick velocity kept).
  LinkParams frictionless() const;
};

struct ArmState {
  Vec3 q = Vec3::Zero();
  Vec3 dq = Vec3::Zero();
};

// Full inertial parameter layout, per link {mass*com, mass, inertia}, then
// per joint viscous coefficient.
inline constexpr int kFullParams = 12;
using FullParamVector = Eigen::Matrix<double, kFullParams, 1>;
using FullRegressor = Eigen::Matrix<double, kJoints, kFullParams>;

// The part of LinkParams that is not identified: kinematics and gravity.
struct Geometry {
  std::array<double, kJoints> lengths{};
  double gravity = 9.81;
};

Geometry geometry_of(const LinkParams& params);
FullParamVector full_parameter_vector(const LinkParams& params, bool viscous = true);

// tau = M(q) ddq + C(q, dq) dq + g(q) + b .* dq for an arbitrary parameter
// vector (it need not be physically consistent).
Vec3 rigid_body_torque(const Geometry& geom, const FullParamVector& phi, const Vec3& q,
                       const Vec3& dq, const Vec3& ddq);

Vec3 ideal_inverse_dynamics(const Vec3& q, const Vec3& dq, const Vec3& ddq,
                            const LinkParams& params, bool viscous = true);

Mat3 mass_matrix(const Vec3& q, const LinkParams& params);

// Columns obtained by evaluating rigid_body_torque on unit basis vectors.
FullRegressor full_regressor(const Geometry& geom, const Vec3& q, const Vec3& dq,
                             const Vec3& ddq);

// Base-parameter regressor: the columns of the full regressor that are not
// identically zero or linearly dependent on earlier columns for this chain.
class Regressor {
 public:
  explicit Regressor(const Geometry& geom, bool viscous = true);

  int width() const { return static_cast<int>(kept_.size()); }
  const std::vector<int>& kept_columns() const { return kept_; }
  bool viscous() const { return viscous_; }
  const Geometry& geometry() const { return geom_; }

  // 3 x width() matrix Y with Y * base_parameters(phi) == rigid_body_torque(phi).
  Eigen::MatrixXd row(const Vec3& q, const Vec3& dq, const Vec3& ddq) const;

  // Maps a full parameter vector onto the base parameters.
  Eigen::VectorXd base_parameters(const FullParamVector& phi) const;

 private:
  Geometry geom_;
  bool viscous_;
  std::vector<int> kept_;
  // width() x kFullParams; base = regroup_ * phi.
  Eigen::MatrixXd regroup_;
};

struct ForwardDetail {
  Vec3 ddq = Vec3::Zero();
  std::array<bool, kJoints> stuck{};
  // Torque the stuck joints must transmit to stay at rest (non-friction
  // torque). Zero for slipping joints.
  Vec3 holding = Vec3::Zero();
};

// Forward dynamics with stick-slip friction. A joint inside its stick velocity
// band whose holding torque is within the static level is stuck (ddq = 0);
// otherwise Coulomb + viscous friction acts.
ForwardDetail forward_dynamics_detail(const ArmState& state, const Vec3& torque,
                                      const LinkParams& params);
Vec3 forward_dynamics(const ArmState& state, const Vec3& torque, const LinkParams& params);

// Semi-implicit Euler step; stuck joints get dq = 0 after the velocity update.
ArmState integrate_step(const ArmState& state, const Vec3& torque, const LinkParams& params,
                        double dt);

double kinetic_energy(const ArmState& state, const LinkParams& params);

}  // namespace dzid
