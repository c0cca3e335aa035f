#include "dzid/ne_baseline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dzid/log.hpp"

namespace dzid {

NeParams rls_init(int dim, double prior_scale) {
  if (dim < 1) throw InvalidInput("rls_init: dimension must be >= 1");
  if (!(prior_scale > 0.0) || !std::isfinite(prior_scale)) {
    throw InvalidInput("rls_init: prior scale must be positive and finite");
  }
  NeParams s;
  s.phi = Eigen::VectorXd::Zero(dim);
  s.cov = prior_scale * Eigen::MatrixXd::Identity(dim, dim);
  return s;
}

void rls_update(NeParams& state, const Eigen::MatrixXd& y, const Vec3& tau) {
  if (y.rows() != kJoints || y.cols() != state.dim()) {
    throw InvalidInput("rls_update: regressor is " + std::to_string(y.rows()) + "x" +
                       std::to_string(y.cols()) + ", expected 3x" + std::to_string(state.dim()));
  }
  if (!y.allFinite() || !all_finite(tau)) throw InvalidInput("rls_update: non-finite observation");

  const Eigen::Index n = state.dim();
  for (int j = 0; j < kJoints; ++j) {
    const Eigen::RowVectorXd h = y.row(j);
    const Eigen::VectorXd ph = state.cov * h.transpose();
    const double gain_den = 1.0 + h.dot(ph);
    const Eigen::VectorXd k = ph / gain_den;
    state.phi += k * (tau[j] - h.dot(state.phi));
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - k * h;
    state.cov = a * state.cov * a.transpose() + k * k.transpose();
    state.cov = 0.5 * (state.cov + state.cov.transpose()).eval();
  }
  ++state.observations;
}

Vec3 NeModel::predict(const Sample& s) const {
  return regressor_.row(s.q, s.dq, s.ddq) * params_.phi;
}

Eigen::MatrixXd NeModel::predict(const Dataset& ds) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ds.size()), kJoints);
  for (std::size_t i = 0; i < ds.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = predict(ds[i]).transpose();
  return out;
}

void NeModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file " + path);
  const auto& g = regressor_.geometry();
  const Eigen::Index n = params_.phi.size();
  out << "dzid-rls v1 " << n << ' ' << (regressor_.viscous() ? 1 : 0) << '\n';
  out << format_double(g.lengths[0]) << ' ' << format_double(g.lengths[1]) << ' '
      << format_double(g.lengths[2]) << ' ' << format_double(g.gravity) << '\n';
  out << params_.observations << '\n';
  for (Eigen::Index i = 0; i < n; ++i) out << (i ? " " : "") << format_double(params_.phi[i]);
  out << '\n';
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) out << (c ? " " : "") << format_double(params_.cov(r, c));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

NeModel NeModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path);
  std::string magic, version;
  Eigen::Index n = 0;
  int viscous = 0;
  in >> magic >> version >> n >> viscous;
  if (!in || magic != "dzid-rls" || version != "v1" || n < 1) {
    throw DataError(path + ": not a dzid-rls v1 file");
  }
  Geometry g;
  in >> g.lengths[0] >> g.lengths[1] >> g.lengths[2] >> g.gravity;
  NeParams p;
  in >> p.observations;
  p.phi.resize(n);
  p.cov.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) in >> p.phi[i];
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) in >> p.cov(r, c);
  }
  if (!in) throw DataError(path + ": truncated model file");
  Regressor reg(g, viscous != 0);
  if (reg.width() != n) {
    throw DataError(path + ": stored " + std::to_string(n) + " parameters, regressor has " +
                    std::to_string(reg.width()));
  }
  return NeModel(std::move(reg), std::move(p));
}

NeModel ne_fit(const Dataset& train, const DeadZoneMask& mask, const Geometry& geom,
               const NeFitConfig& cfg) {
  if (mask.size() != train.size()) throw InvalidInput("ne_fit: mask and dataset sizes differ");
  Regressor reg(geom, cfg.viscous);
  NeParams state = rls_init(reg.width(), cfg.prior_scale);
  std::size_t used = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!mask.all_moving(i)) continue;
    const Sample& s = train[i];
    rls_update(state, reg.row(s.q, s.dq, s.ddq), s.tau);
    ++used;
  }
  if (used < static_cast<std::size_t>(reg.width())) {
    throw DataError("ne_fit: " + std::to_string(used) + " of " + std::to_string(train.size()) +
                    " samples have every joint moving; need at least " + std::to_string(reg.width()));
  }
  spdlog::debug("ne_fit: {} of {} rows used", used, train.size());
  return NeModel(std::move(reg), std::move(state));
}

}  // namespace dzid
