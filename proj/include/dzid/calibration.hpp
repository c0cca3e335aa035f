#pragma once

// Tunes per-joint static friction so that a target share of samples falls
// outside the dead zone under the default excitation.

#include "dzid/deadzone.hpp"
#include "dzid/signal.hpp"
#include "dzid/simulator.hpp"

namespace dzid {

// Simulate, filter, and mask with sigma taken over the post-warm-up record.
MovingStats simulated_moving_stats(const SimConfig& sim, const LinkParams& params,
                                   const FilterConfig& filters = {}, const MaskConfig& mask = {});

struct CalibrationConfig {
  double target = 0.70;         // per-joint moving fraction
  double tolerance = 0.01;
  double coulomb_ratio = 0.3;   // sliding level as a share of breakaway
  double static_max = 40.0;     // [N m] bisection upper bound
  int rounds = 2;               // coordinate passes over the joints
  int max_bisections = 14;
};

struct CalibrationResult {
  LinkParams params;
  MovingStats stats;
  int simulations = 0;
};

// Coordinate-wise bisection on each joint's static level. Moving fraction
// falls as the static level rises, so each joint is bracketed in
// [0, static_max].
CalibrationResult calibrate_static_friction(const SimConfig& sim, const LinkParams& base,
                                            const CalibrationConfig& cfg = {},
                                            const FilterConfig& filters = {},
                                            const MaskConfig& mask = {});

}  // namespace dzid
