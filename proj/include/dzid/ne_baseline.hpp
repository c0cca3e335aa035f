#pragma once

// Rigid-body baseline: base parameters identified by recursive least squares
// on samples where every joint moves, torque predicted through the regressor.

#include <cstddef>
#include <string>

#include "dzid/dataset.hpp"
#include "dzid/deadzone.hpp"
#include "dzid/dynamics.hpp"

namespace dzid {

struct NeParams {
  Eigen::VectorXd phi;
  Eigen::MatrixXd cov;
  std::size_t observations = 0;  // samples, not scalar rows

  int dim() const { return static_cast<int>(phi.size()); }
};

NeParams rls_init(int dim, double prior_scale);

// Three sequential scalar updates sharing one covariance, forgetting factor 1.
// Covariance uses the Joseph form and is symmetrized afterwards.
void rls_update(NeParams& state, const Eigen::MatrixXd& y, const Vec3& tau);

struct NeFitConfig {
  bool viscous = true;
  double prior_scale = 1e6;
};

class NeModel {
 public:
  NeModel(Regressor regressor, NeParams params)
      : regressor_(std::move(regressor)), params_(std::move(params)) {}

  const Regressor& regressor() const { return regressor_; }
  const NeParams& params() const { return params_; }

  Vec3 predict(const Sample& s) const;
  Eigen::MatrixXd predict(const Dataset& ds) const;  // N x 3

  void save(const std::string& path) const;
  static NeModel load(const std::string& path);

 private:
  Regressor regressor_;
  NeParams params_;
};

// Feeds the all-moving rows of `train` to RLS in dataset order.
NeModel ne_fit(const Dataset& train, const DeadZoneMask& mask, const Geometry& geom,
               const NeFitConfig& cfg = {});

}  // namespace dzid
