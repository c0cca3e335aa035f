#include "dzid/simulator.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dzid/csv.hpp"

namespace dzid {

SimConfig SimConfig::defaults() {
  SimConfig c;
  for (int j = 0; j < kJoints; ++j) c.excitation[j].phase_seed = static_cast<std::uint64_t>(j + 1);
  c.kp = Vec3(50.0, 50.0, 50.0);
  c.kd = Vec3(1.5, 1.5, 1.5);
  return c;
}

void SimConfig::validate() const {
  if (!(timestep > 0.0)) throw InvalidInput("timestep must be positive");
  if (!(duration > 0.0)) throw InvalidInput("duration must be positive");
  if (substeps < 1) throw InvalidInput("substeps must be >= 1");
  constexpr double kNyquist = 25.0;  // half of the 50 Hz output rate
  for (int j = 0; j < kJoints; ++j) {
    const auto& e = excitation[j];
    const std::string tag = "excitation j" + std::to_string(j) + ": ";
    if (e.sinusoids < 0) throw InvalidInput(tag + "sinusoid count must be >= 0");
    if (!(e.freq_min > 0.0 && e.freq_max >= e.freq_min && e.freq_max < kNyquist)) {
      throw InvalidInput(tag + "frequency range must lie in (0, 25) Hz");
    }
    if (!(e.amp_min >= 0.0 && e.amp_max >= e.amp_min)) {
      throw InvalidInput(tag + "amplitude range must satisfy 0 <= min <= max");
    }
    if (!std::isfinite(e.offset)) throw InvalidInput(tag + "offset must be finite");
  }
  if (!kp.allFinite() || !kd.allFinite() || (kp.array() < 0).any() || (kd.array() < 0).any()) {
    throw InvalidInput("PD gains must be finite and non-negative");
  }
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(duration / timestep));
}

SimulationDiverged::SimulationDiverged(std::size_t step, double speed)
    : NumericalError("simulation diverged at step " + std::to_string(step) + " (|dq| = " +
                     std::to_string(speed) + " rad/s)"),
      step_(step) {}

ExcitationReference::ExcitationReference(const SimConfig& config) {
  for (int j = 0; j < kJoints; ++j) {
    const auto& e = config.excitation[j];
    offset_[j] = e.offset;
    Rng rng(hash_combine(hash_combine(config.seed, static_cast<std::uint64_t>(j)), e.phase_seed));
    for (int k = 0; k < e.sinusoids; ++k) {
      Component c;
      c.omega = 2.0 * M_PI * rng.uniform(e.freq_min, e.freq_max);
      c.amp = rng.uniform(e.amp_min, e.amp_max);
      c.phase = rng.uniform(0.0, 2.0 * M_PI);
      parts_[j].push_back(c);
    }
  }
}

Vec3 ExcitationReference::angle(double t) const {
  Vec3 r = offset_;
  for (int j = 0; j < kJoints; ++j) {
    for (const auto& c : parts_[j]) r[j] += c.amp * (std::sin(c.omega * t + c.phase) - std::sin(c.phase));
  }
  return r;
}

Vec3 ExcitationReference::rate(double t) const {
  Vec3 r = Vec3::Zero();
  for (int j = 0; j < kJoints; ++j) {
    for (const auto& c : parts_[j]) r[j] += c.amp * c.omega * std::cos(c.omega * t + c.phase);
  }
  return r;
}

TrajectoryLog simulate_trajectory(const SimConfig& config, const LinkParams& params) {
  config.validate();
  params.validate();

  const ExcitationReference ref(config);
  const std::size_t n = config.steps();
  const double dt = config.timestep;
  const double h = dt / config.substeps;

  TrajectoryLog log;
  log.timestep = dt;
  log.t.reserve(n);
  log.q.reserve(n);
  log.dq.reserve(n);
  log.tau.reserve(n);

  ArmState state;
  state.q = ref.angle(0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Vec3 err = ref.angle(t) - state.q;
    const Vec3 derr = ref.rate(t) - state.dq;
    const Vec3 tau = config.kp.cwiseProduct(err) + config.kd.cwiseProduct(derr);

    log.t.push_back(t);
    log.q.push_back(state.q);
    log.dq.push_back(state.dq);
    log.tau.push_back(tau);

    // Torque is held over the control period.
    for (int s = 0; s < config.substeps; ++s) state = integrate_step(state, tau, params, h);
    const double speed = state.dq.cwiseAbs().maxCoeff();
    if (!(speed <= kDivergenceSpeed)) throw SimulationDiverged(k, speed);
  }
  return log;
}

void write_trajectory_csv(const TrajectoryLog& log, const std::string& path) {
  CsvWriter out(path, {"t", "q0", "q1", "q2", "dq0", "dq1", "dq2", "tau0", "tau1", "tau2"});
  std::vector<double> row(10);
  for (std::size_t k = 0; k < log.size(); ++k) {
    row[0] = log.t[k];
    for (int j = 0; j < kJoints; ++j) {
      row[1 + j] = log.q[k][j];
      row[4 + j] = log.dq[k][j];
      row[7 + j] = log.tau[k][j];
    }
    out.write_row(row);
  }
  out.close();
}

TrajectoryLog read_trajectory_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto col = [&](const char* name) { return table.column_index(name); };
  const std::size_t ct = col("t");
  std::array<std::size_t, kJoints> cq, cdq, ctau;
  for (int j = 0; j < kJoints; ++j) {
    cq[j] = col(("q" + std::to_string(j)).c_str());
    cdq[j] = col(("dq" + std::to_string(j)).c_str());
    ctau[j] = col(("tau" + std::to_string(j)).c_str());
  }
  TrajectoryLog log;
  for (const auto& row : table.rows) {
    log.t.push_back(row[ct]);
    Vec3 q, dq, tau;
    for (int j = 0; j < kJoints; ++j) {
      q[j] = row[cq[j]];
      dq[j] = row[cdq[j]];
      tau[j] = row[ctau[j]];
    }
    log.q.push_back(q);
    log.dq.push_back(dq);
    log.tau.push_back(tau);
  }
  if (log.size() >= 2) log.timestep = log.t[1] - log.t[0];
  for (std::size_t k = 1; k < log.size(); ++k) {
    if (!(log.t[k] > log.t[k - 1])) {
      throw DataError(path + ": time column is not strictly increasing at row " +
                      std::to_string(k + 1));
    }
  }
  return log;
}

namespace {

std::string joint_key(const char* prefix, int j, const char* field) {
  return std::string(prefix) + std::to_string(j) + "." + field;
}

}  // namespace

LinkParams link_params_from(const KeyValueFile& kv, const LinkParams& base) {
  LinkParams p = base;
  p.gravity = kv.get_double("gravity", p.gravity);
  for (int j = 0; j < kJoints; ++j) {
    auto& l = p.links[j];
    l.mass = kv.get_double(joint_key("link", j, "mass"), l.mass);
    l.length = kv.get_double(joint_key("link", j, "length"), l.length);
    l.com = kv.get_double(joint_key("link", j, "com"), l.com);
    l.inertia = kv.get_double(joint_key("link", j, "inertia"), l.inertia);
    auto& f = p.joints[j];
    f.viscous = kv.get_double(joint_key("joint", j, "viscous"), f.viscous);
    f.coulomb = kv.get_double(joint_key("joint", j, "coulomb"), f.coulomb);
    f.static_level = kv.get_double(joint_key("joint", j, "static"), f.static_level);
    f.stick_velocity = kv.get_double(joint_key("joint", j, "stick_velocity"), f.stick_velocity);
  }
  try {
    p.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(kv.origin() + ": " + e.what());
  }
  return p;
}

SimConfig sim_config_from(const KeyValueFile& kv, const SimConfig& base) {
  SimConfig c = base;
  c.timestep = kv.get_double("sim.timestep", c.timestep);
  c.duration = kv.get_double("sim.duration", c.duration);
  c.substeps = static_cast<int>(kv.get_int("sim.substeps", c.substeps));
  c.seed = kv.get_u64("sim.seed", c.seed);
  for (int j = 0; j < kJoints; ++j) {
    auto& e = c.excitation[j];
    e.sinusoids = static_cast<int>(kv.get_int(joint_key("excite.j", j, "sinusoids"), e.sinusoids));
    e.freq_min = kv.get_double(joint_key("excite.j", j, "freq_min"), e.freq_min);
    e.freq_max = kv.get_double(joint_key("excite.j", j, "freq_max"), e.freq_max);
    e.amp_min = kv.get_double(joint_key("excite.j", j, "amp_min"), e.amp_min);
    e.amp_max = kv.get_double(joint_key("excite.j", j, "amp_max"), e.amp_max);
    e.offset = kv.get_double(joint_key("excite.j", j, "offset"), e.offset);
    e.phase_seed = kv.get_u64(joint_key("excite.j", j, "phase_seed"), e.phase_seed);
    c.kp[j] = kv.get_double("sim.kp" + std::to_string(j), c.kp[j]);
    c.kd[j] = kv.get_double("sim.kd" + std::to_string(j), c.kd[j]);
  }
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(kv.origin() + ": " + e.what());
  }
  return c;
}

void store_link_params(const LinkParams& p, KeyValueFile& kv) {
  kv.set("gravity", format_double(p.gravity));
  for (int j = 0; j < kJoints; ++j) {
    const auto& l = p.links[j];
    kv.set(joint_key("link", j, "mass"), format_double(l.mass));
    kv.set(joint_key("link", j, "length"), format_double(l.length));
    kv.set(joint_key("link", j, "com"), format_double(l.com));
    kv.set(joint_key("link", j, "inertia"), format_double(l.inertia));
    const auto& f = p.joints[j];
    kv.set(joint_key("joint", j, "viscous"), format_double(f.viscous));
    kv.set(joint_key("joint", j, "coulomb"), format_double(f.coulomb));
    kv.set(joint_key("joint", j, "static"), format_double(f.static_level));
    kv.set(joint_key("joint", j, "stick_velocity"), format_double(f.stick_velocity));
  }
}

void store_sim_config(const SimConfig& c, KeyValueFile& kv) {
  kv.set("sim.timestep", format_double(c.timestep));
  kv.set("sim.duration", format_double(c.duration));
  kv.set("sim.substeps", std::to_string(c.substeps));
  kv.set("sim.seed", std::to_string(c.seed));
  for (int j = 0; j < kJoints; ++j) {
    const auto& e = c.excitation[j];
    kv.set(joint_key("excite.j", j, "sinusoids"), std::to_string(e.sinusoids));
    kv.set(joint_key("excite.j", j, "freq_min"), format_double(e.freq_min));
    kv.set(joint_key("excite.j", j, "freq_max"), format_double(e.freq_max));
    kv.set(joint_key("excite.j", j, "amp_min"), format_double(e.amp_min));
    kv.set(joint_key("excite.j", j, "amp_max"), format_double(e.amp_max));
    kv.set(joint_key("excite.j", j, "offset"), format_double(e.offset));
    kv.set(joint_key("excite.j", j, "phase_seed"), std::to_string(e.phase_seed));
    kv.set("sim.kp" + std::to_string(j), format_double(c.kp[j]));
    kv.set("sim.kd" + std::to_string(j), format_double(c.kd[j]));
  }
}

}  // namespace dzid
