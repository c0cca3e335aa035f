#pragma once

// Per-joint dead-zone reliability: a joint sample is unreliable (r = 0) when
// its speed does not exceed alpha times the joint's velocity standard
// deviation over the whole motion record.

#include <string>
#include <vector>

#include "dzid/dataset.hpp"

namespace dzid {

struct MaskConfig {
  double alpha = 0.1;

  void validate() const;
};

struct DeadZoneMask {
  Vec3 sigma = Vec3::Zero();
  // N x 3, entries exactly 0.0 or 1.0.
  Eigen::MatrixXd r;

  std::size_t size() const { return static_cast<std::size_t>(r.rows()); }
  bool all_moving(std::size_t row) const { return r.row(static_cast<Eigen::Index>(row)).minCoeff() > 0.5; }
  DeadZoneMask subset(const std::vector<std::size_t>& rows) const;
  static DeadZoneMask ones(std::size_t rows);
};

// Population standard deviation of each joint velocity.
Vec3 joint_sigma(const Dataset& ds);

DeadZoneMask compute_mask(const Dataset& ds, const Vec3& sigma, const MaskConfig& cfg);

struct MovingStats {
  Vec3 per_joint = Vec3::Zero();
  double all_moving = 0.0;
  std::size_t rows = 0;
  std::size_t all_moving_rows = 0;
};

MovingStats moving_stats(const DeadZoneMask& m);

void write_mask_csv(const DeadZoneMask& m, const std::string& path);
// sigma is not part of the CSV; pass it from the dead-zone sidecar.
DeadZoneMask read_mask_csv(const std::string& path, const Vec3& sigma);

}  // namespace dzid
