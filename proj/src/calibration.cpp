#include "dzid/calibration.hpp"

#include <cmath>

#include "dzid/log.hpp"

namespace dzid {

MovingStats simulated_moving_stats(const SimConfig& sim, const LinkParams& params,
                                   const FilterConfig& filters, const MaskConfig& mask) {
  const Dataset body = build_dataset(simulate_trajectory(sim, params), filters).after_warmup();
  return moving_stats(compute_mask(body, joint_sigma(body), mask));
}

CalibrationResult calibrate_static_friction(const SimConfig& sim, const LinkParams& base,
                                            const CalibrationConfig& cfg,
                                            const FilterConfig& filters, const MaskConfig& mask) {
  if (!(cfg.target > 0.0 && cfg.target < 1.0)) throw InvalidInput("calibration target must be in (0, 1)");
  if (!(cfg.tolerance > 0.0)) throw InvalidInput("calibration tolerance must be positive");
  if (!(cfg.coulomb_ratio >= 0.0 && cfg.coulomb_ratio <= 1.0)) {
    throw InvalidInput("coulomb ratio must be in [0, 1]");
  }
  if (!(cfg.static_max > 0.0)) throw InvalidInput("static_max must be positive");

  CalibrationResult res;
  res.params = base;
  const auto set_level = [&](LinkParams& p, int j, double level) {
    p.joints[j].static_level = level;
    p.joints[j].coulomb = cfg.coulomb_ratio * level;
  };
  const auto evaluate = [&](const LinkParams& p) {
    ++res.simulations;
    return simulated_moving_stats(sim, p, filters, mask);
  };

  for (int j = 0; j < kJoints; ++j) set_level(res.params, j, res.params.joints[j].static_level);
  res.stats = evaluate(res.params);
  for (int round = 0; round < cfg.rounds; ++round) {
    bool settled = true;
    for (int j = 0; j < kJoints; ++j) {
      if (std::abs(res.stats.per_joint[j] - cfg.target) <= cfg.tolerance) continue;
      settled = false;
      double lo = 0.0, hi = cfg.static_max;
      for (int it = 0; it < cfg.max_bisections; ++it) {
        const double mid = 0.5 * (lo + hi);
        LinkParams trial = res.params;
        set_level(trial, j, mid);
        const MovingStats s = evaluate(trial);
        spdlog::debug("calibrate joint {} static {:.4f}: moving {:.4f}", j, mid, s.per_joint[j]);
        res.params = trial;
        res.stats = s;
        if (std::abs(s.per_joint[j] - cfg.target) <= cfg.tolerance) break;
        (s.per_joint[j] > cfg.target ? lo : hi) = mid;
      }
    }
    if (settled) break;
  }
  spdlog::info("calibrated static levels {:.4f} {:.4f} {:.4f}: moving {:.3f} {:.3f} {:.3f}, all {:.3f}",
               res.params.joints[0].static_level, res.params.joints[1].static_level,
               res.params.joints[2].static_level, res.stats.per_joint[0], res.stats.per_joint[1],
               res.stats.per_joint[2], res.stats.all_moving);
  return res;
}

}  // namespace dzid
