#pragma once

// Sample-size sweep, trace on the reserved segment, and the CSV reports.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dzid/deadzone.hpp"
#include "dzid/mlp.hpp"
#include "dzid/ne_baseline.hpp"
#include "dzid/signal.hpp"

namespace dzid {

enum class Method { Ne, NeRigid, Conventional, Proposed };

const char* to_string(Method m);
Method parse_method(const std::string& s);  // throws UsageError

struct PrepareConfig {
  FilterConfig filters{};
  MaskConfig mask{};
  SplitConfig split{};
  std::uint64_t seed = 1;
};

// Everything the training stages need, as written by `prepare`.
struct PreparedData {
  Dataset pool;     // training pool
  Dataset val;
  Dataset test;
  Dataset segment;  // contiguous rows reserved for the trace
  DeadZoneMask pool_mask;
  DeadZoneMask segment_mask;
  Scaler scaler;    // fit on the pool inputs
  Geometry geometry;
  double alpha = 0.1;
  MovingStats record_stats;  // post-warm-up record, which also defines sigma
  std::size_t segment_begin = 0;

  const Vec3& sigma() const { return pool_mask.sigma; }
  MovingStats pool_stats() const { return moving_stats(pool_mask); }

  void save(const std::string& dir) const;
  static PreparedData load(const std::string& dir);
};

PreparedData prepare_data(const TrajectoryLog& log, const Geometry& geom, const PrepareConfig& cfg);

// Input standardization and mask handling shared by the sweep and the CLI.
TrainResult train_network(const PreparedData& data, const Dataset& train, const DeadZoneMask& mask,
                          const TrainConfig& cfg);
// NE fit with or without the viscous columns.
NeModel fit_baseline(const PreparedData& data, const Dataset& train, const DeadZoneMask& mask,
                     Method method, double prior_scale = 1e6);

Eigen::MatrixXd predict_torque(const PreparedData& data, const MlpModel& model, const Dataset& ds);

struct SweepConfig {
  std::vector<std::size_t> sizes;  // empty means 300..3000 step 300
  int trials = 10;
  std::uint64_t seed = 1;
  std::vector<Method> methods{Method::Ne, Method::Conventional, Method::Proposed};
  TrainConfig train{};
  double prior_scale = 1e6;
  int jobs = 1;
  bool t_interval = false;  // Student t multiplier instead of 1.96

  static std::vector<std::size_t> default_sizes();
  void validate(std::size_t pool_size) const;
};

// Seed of trial t at size k.
std::uint64_t trial_seed(std::uint64_t base, std::size_t size, int trial);

struct SweepCell {
  Method method = Method::Ne;
  int joint = 0;
  std::size_t size = 0;
  double mean = 0.0;
  double ci95 = 0.0;
  // One slot per configured trial; NaN marks a failed run.
  std::vector<double> trials;

  int completed() const;
};

struct SweepReport {
  std::vector<SweepCell> cells;  // ordered by method, joint, size
  int failures = 0;              // failed (method, size, trial) runs

  const SweepCell* find(Method m, int joint, std::size_t size) const;
};

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;
};

// Mean and half-width over the finite entries, using the sample standard
// deviation. Half-width is NaN with fewer than two values.
Interval confidence_interval(const std::vector<double>& values, bool t_multiplier = false);

SweepReport run_sweep(const PreparedData& data, const SweepConfig& cfg);

struct TraceReport {
  double rate_hz = 50.0;
  Eigen::MatrixXd measured;  // rows x 3
  Eigen::MatrixXd ne, conventional, proposed;
  Eigen::MatrixXd flags;     // 1 = dead zone

  Eigen::Index rows() const { return measured.rows(); }
};

TraceReport run_trace(const PreparedData& data, const NeModel& ne, const MlpModel& conventional,
                      const MlpModel& proposed);

struct TraceDeviation {
  Vec3 proposed = Vec3::Zero();      // mean |proposed - NE| over flagged rows
  Vec3 conventional = Vec3::Zero();
  Eigen::Vector3i flagged = Eigen::Vector3i::Zero();
  double proposed_all = 0.0;         // pooled over all flagged joint-rows
  double conventional_all = 0.0;
};

TraceDeviation trace_deviation(const TraceReport& r);

void write_sweep_csv(const SweepReport& r, const std::string& path);
SweepReport read_sweep_csv(const std::string& path);
void write_trace_csv(const TraceReport& r, const std::string& path);
TraceReport read_trace_csv(const std::string& path);
void write_summary(const PreparedData& data, const std::optional<SweepReport>& sweep,
                   const std::string& path);

}  // namespace dzid
