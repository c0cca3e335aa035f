#include "dzid/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dzid {

namespace {

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

// Link 1 zero frame expressed in the turntable frame: x1 = z0 (up),
// y1 = x0, z1 = y0 (horizontal pitch axis).
Mat3 pitch_mount() {
  Mat3 r;
  r << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  return r;
}

struct BodyInertia {
  double mass;
  Vec3 first_moment;  // mass * com, link frame
  Mat3 inertia;       // about the link origin, link frame
};

std::array<BodyInertia, kJoints> bodies_from(const FullParamVector& phi) {
  std::array<BodyInertia, kJoints> b;
  // Turntable: com on the yaw axis, only the axial inertia matters.
  b[0].first_moment = Vec3(0, 0, phi[0]);
  b[0].mass = phi[1];
  b[0].inertia = Vec3(0, 0, phi[2]).asDiagonal();
  // Slender links along their local x axis.
  for (int i = 1; i < kJoints; ++i) {
    b[i].first_moment = Vec3(phi[3 * i], 0, 0);
    b[i].mass = phi[3 * i + 1];
    b[i].inertia = Vec3(0, phi[3 * i + 2], phi[3 * i + 2]).asDiagonal();
  }
  return b;
}

void check_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) throw InvalidInput(std::string("non-finite ") + what);
}

}  // namespace

LinkParams LinkParams::defaults() {
  LinkParams p;
  p.links[0] = {1.0, 0.10, 0.05, 0.02};
  p.links[1] = {0.8, 0.25, 0.12, 0.016};
  p.links[2] = {0.5, 0.25, 0.12, 0.010};
  p.joints[0] = {0.05, 6.0, 20.0, 0.05};
  p.joints[1] = {0.05, 6.75, 22.5, 0.05};
  p.joints[2] = {0.05, 7.5, 25.0, 0.05};
  p.gravity = 9.81;
  return p;
}

void LinkParams::validate() const {
  for (int i = 0; i < kJoints; ++i) {
    const auto& l = links[i];
    const std::string tag = "link" + std::to_string(i) + ": ";
    if (!(l.mass > 0.0)) throw InvalidInput(tag + "mass must be positive");
    if (!(l.length > 0.0)) throw InvalidInput(tag + "length must be positive");
    if (!(l.inertia > 0.0)) throw InvalidInput(tag + "inertia must be positive");
    if (!(l.com > 0.0 && l.com <= l.length)) {
      throw InvalidInput(tag + "com distance must lie in (0, length]");
    }
    const auto& j = joints[i];
    const std::string jtag = "joint" + std::to_string(i) + ": ";
    if (!(j.viscous >= 0.0)) throw InvalidInput(jtag + "viscous coefficient must be >= 0");
    if (!(j.coulomb >= 0.0)) throw InvalidInput(jtag + "coulomb level must be >= 0");
    if (!(j.static_level >= j.coulomb)) {
      throw InvalidInput(jtag + "static level must be >= coulomb level");
    }
    if (!(j.stick_velocity > 0.0)) throw InvalidInput(jtag + "stick velocity must be positive");
  }
  if (!std::isfinite(gravity)) throw InvalidInput("gravity must be finite");
}

LinkParams LinkParams::frictionless() const {
  LinkParams p = *this;
  for (auto& j : p.joints) {
    j.viscous = 0.0;
    j.coulomb = 0.0;
    j.static_level = 0.0;
  }
  return p;
}

Geometry geometry_of(const LinkParams& params) {
  Geometry g;
  for (int i = 0; i < kJoints; ++i) g.lengths[i] = params.links[i].length;
  g.gravity = params.gravity;
  return g;
}

FullParamVector full_parameter_vector(const LinkParams& params, bool viscous) {
  FullParamVector phi;
  for (int i = 0; i < kJoints; ++i) {
    const auto& l = params.links[i];
    phi[3 * i] = l.mass * l.com;
    phi[3 * i + 1] = l.mass;
    phi[3 * i + 2] = l.inertia;
    phi[9 + i] = viscous ? params.joints[i].viscous : 0.0;
  }
  return phi;
}

Vec3 rigid_body_torque(const Geometry& geom, const FullParamVector& phi, const Vec3& q,
                       const Vec3& dq, const Vec3& ddq) {
  check_finite(q, "joint angles");
  check_finite(dq, "joint velocities");
  check_finite(ddq, "joint accelerations");

  const auto body = bodies_from(phi);
  const Vec3 z = Vec3::UnitZ();

  // rot[i] maps frame i coordinates into frame i-1; pos[i] is the origin of
  // frame i expressed in frame i-1.
  std::array<Mat3, kJoints> rot;
  std::array<Vec3, kJoints> pos;
  rot[0] = rot_z(q[0]);
  pos[0] = Vec3::Zero();
  rot[1] = pitch_mount() * rot_z(q[1]);
  pos[1] = Vec3(0, 0, geom.lengths[0]);
  rot[2] = rot_z(q[2]);
  pos[2] = Vec3(geom.lengths[1], 0, 0);

  std::array<Vec3, kJoints> w, dw, a;
  Vec3 w_prev = Vec3::Zero();
  Vec3 dw_prev = Vec3::Zero();
  // Gravity enters as an upward acceleration of the base.
  Vec3 a_prev(0, 0, geom.gravity);
  for (int i = 0; i < kJoints; ++i) {
    const Mat3 rt = rot[i].transpose();
    const Vec3 w_in = rt * w_prev;
    w[i] = w_in + dq[i] * z;
    dw[i] = rt * dw_prev + ddq[i] * z + w_in.cross(dq[i] * z);
    a[i] = rt * (a_prev + dw_prev.cross(pos[i]) + w_prev.cross(w_prev.cross(pos[i])));
    w_prev = w[i];
    dw_prev = dw[i];
    a_prev = a[i];
  }

  Vec3 tau;
  Vec3 f_child = Vec3::Zero();
  Vec3 n_child = Vec3::Zero();
  for (int i = kJoints - 1; i >= 0; --i) {
    const auto& b = body[i];
    Vec3 f = b.mass * a[i] + dw[i].cross(b.first_moment) +
             w[i].cross(w[i].cross(b.first_moment));
    Vec3 n = b.inertia * dw[i] + w[i].cross(b.inertia * w[i]) + b.first_moment.cross(a[i]);
    if (i + 1 < kJoints) {
      const Vec3 f_c = rot[i + 1] * f_child;
      f += f_c;
      n += rot[i + 1] * n_child + pos[i + 1].cross(f_c);
    }
    tau[i] = n.dot(z) + phi[9 + i] * dq[i];
    f_child = f;
    n_child = n;
  }
  return tau;
}

Vec3 ideal_inverse_dynamics(const Vec3& q, const Vec3& dq, const Vec3& ddq,
                            const LinkParams& params, bool viscous) {
  return rigid_body_torque(geometry_of(params), full_parameter_vector(params, viscous), q, dq,
                           ddq);
}

Mat3 mass_matrix(const Vec3& q, const LinkParams& params) {
  Geometry g = geometry_of(params);
  g.gravity = 0.0;
  const FullParamVector phi = full_parameter_vector(params, false);
  Mat3 m;
  for (int k = 0; k < kJoints; ++k) {
    m.col(k) = rigid_body_torque(g, phi, q, Vec3::Zero(), Vec3::Unit(k));
  }
  // Exact symmetry up to rounding; make it exact for the solvers.
  return 0.5 * (m + m.transpose());
}

FullRegressor full_regressor(const Geometry& geom, const Vec3& q, const Vec3& dq,
                             const Vec3& ddq) {
  FullRegressor y;
  for (int k = 0; k < kFullParams; ++k) {
    y.col(k) = rigid_body_torque(geom, FullParamVector::Unit(k), q, dq, ddq);
  }
  return y;
}

Regressor::Regressor(const Geometry& geom, bool viscous) : geom_(geom), viscous_(viscous) {
  // Probe the column space on a fixed set of random states.
  constexpr int kProbes = 64;
  Rng rng(0x5EEDBA5Eull);
  Eigen::MatrixXd stacked(kJoints * kProbes, kFullParams);
  for (int s = 0; s < kProbes; ++s) {
    Vec3 q, dq, ddq;
    for (int j = 0; j < kJoints; ++j) {
      q[j] = rng.uniform(-M_PI, M_PI);
      dq[j] = rng.uniform(-3.0, 3.0);
      ddq[j] = rng.uniform(-10.0, 10.0);
    }
    stacked.middleRows(kJoints * s, kJoints) = full_regressor(geom, q, dq, ddq);
  }
  if (!viscous) stacked.rightCols(kJoints).setZero();

  const double scale = stacked.cwiseAbs().maxCoeff();
  Eigen::MatrixXd basis(stacked.rows(), 0);
  for (int c = 0; c < kFullParams; ++c) {
    const Eigen::VectorXd col = stacked.col(c);
    if (col.norm() <= 1e-12 * scale) continue;
    Eigen::VectorXd resid = col;
    // Two Gram-Schmidt passes for numerical orthogonality.
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) resid -= basis * (basis.transpose() * resid);
    }
    if (resid.norm() <= 1e-8 * col.norm()) continue;
    kept_.push_back(c);
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = resid.normalized();
  }

  const int p = static_cast<int>(kept_.size());
  Eigen::MatrixXd kept_cols(stacked.rows(), p);
  for (int k = 0; k < p; ++k) kept_cols.col(k) = stacked.col(kept_[k]);
  const auto qr = kept_cols.colPivHouseholderQr();

  regroup_ = Eigen::MatrixXd::Zero(p, kFullParams);
  for (int c = 0; c < kFullParams; ++c) {
    const auto it = std::find(kept_.begin(), kept_.end(), c);
    if (it != kept_.end()) {
      regroup_(it - kept_.begin(), c) = 1.0;
      continue;
    }
    if (stacked.col(c).norm() <= 1e-12 * scale) continue;
    regroup_.col(c) = qr.solve(stacked.col(c));
  }
}

Eigen::MatrixXd Regressor::row(const Vec3& q, const Vec3& dq, const Vec3& ddq) const {
  const FullRegressor full = full_regressor(geom_, q, dq, ddq);
  Eigen::MatrixXd y(kJoints, width());
  for (int k = 0; k < width(); ++k) y.col(k) = full.col(kept_[k]);
  return y;
}

Eigen::VectorXd Regressor::base_parameters(const FullParamVector& phi) const {
  FullParamVector p = phi;
  if (!viscous_) p.tail<kJoints>().setZero();
  return regroup_ * p;
}

ForwardDetail forward_dynamics_detail(const ArmState& state, const Vec3& torque,
                                      const LinkParams& params) {
  check_finite(state.q, "joint angles");
  check_finite(state.dq, "joint velocities");
  check_finite(torque, "torque");

  const Mat3 m = mass_matrix(state.q, params);
  // Coriolis, centrifugal and gravity terms without friction.
  const Vec3 bias = rigid_body_torque(geometry_of(params), full_parameter_vector(params, false),
                                      state.q, state.dq, Vec3::Zero());
  const Vec3 net = torque - bias;

  ForwardDetail out;
  std::array<bool, kJoints> stuck{};
  std::array<double, kJoints> breakaway_dir{};
  for (int j = 0; j < kJoints; ++j) {
    stuck[j] = std::abs(state.dq[j]) < params.joints[j].stick_velocity;
  }

  for (int iter = 0; iter <= kJoints; ++iter) {
    Vec3 friction = Vec3::Zero();
    for (int j = 0; j < kJoints; ++j) {
      if (stuck[j]) continue;
      const auto& fr = params.joints[j];
      const double v = state.dq[j];
      const double dir = std::abs(v) >= fr.stick_velocity ? (v > 0 ? 1.0 : -1.0) : breakaway_dir[j];
      friction[j] = fr.coulomb * dir + fr.viscous * v;
    }

    std::vector<int> free_idx, stuck_idx;
    for (int j = 0; j < kJoints; ++j) (stuck[j] ? stuck_idx : free_idx).push_back(j);

    Vec3 ddq = Vec3::Zero();
    if (!free_idx.empty()) {
      const int nf = static_cast<int>(free_idx.size());
      Eigen::MatrixXd mff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (int a = 0; a < nf; ++a) {
        rhs[a] = net[free_idx[a]] - friction[free_idx[a]];
        for (int b = 0; b < nf; ++b) mff(a, b) = m(free_idx[a], free_idx[b]);
      }
      const auto llt = mff.llt();
      if (llt.info() != Eigen::Success) {
        throw NumericalError("mass matrix is not positive definite");
      }
      const Eigen::VectorXd sol = llt.solve(rhs);
      for (int a = 0; a < nf; ++a) ddq[free_idx[a]] = sol[a];
    }

    // Holding torque of each stuck joint given the motion of the free ones.
    int release = -1;
    double worst = 0.0;
    Vec3 holding = Vec3::Zero();
    for (int j : stuck_idx) {
      holding[j] = net[j] - m.row(j).dot(ddq);
      const double excess = std::abs(holding[j]) - params.joints[j].static_level;
      if (excess > worst) {
        worst = excess;
        release = j;
      }
    }
    if (release < 0) {
      out.ddq = ddq;
      out.stuck = stuck;
      out.holding = holding;
      return out;
    }
    stuck[release] = false;
    breakaway_dir[release] = holding[release] > 0 ? 1.0 : -1.0;
  }
  throw NumericalError("stick-slip resolution did not converge");
}

Vec3 forward_dynamics(const ArmState& state, const Vec3& torque, const LinkParams& params) {
  return forward_dynamics_detail(state, torque, params).ddq;
}

ArmState integrate_step(const ArmState& state, const Vec3& torque, const LinkParams& params,
                        double dt) {
  const ForwardDetail fd = forward_dynamics_detail(state, torque, params);
  ArmState next;
  next.dq = state.dq + dt * fd.ddq;
  for (int j = 0; j < kJoints; ++j) {
    if (fd.stuck[j]) next.dq[j] = 0.0;
  }
  next.q = state.q + dt * next.dq;
  return next;
}

double kinetic_energy(const ArmState& state, const LinkParams& params) {
  return 0.5 * state.dq.dot(mass_matrix(state.q, params) * state.dq);
}

}  // namespace dzid
