#include "dzid/deadzone.hpp"

#include <cmath>

#include "dzid/csv.hpp"

namespace dzid {

void MaskConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidInput("alpha must be finite and >= 0");
}

DeadZoneMask DeadZoneMask::subset(const std::vector<std::size_t>& rows) const {
  DeadZoneMask out;
  out.sigma = sigma;
  out.r.resize(static_cast<Eigen::Index>(rows.size()), kJoints);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= size()) throw InvalidInput("mask subset index out of range");
    out.r.row(static_cast<Eigen::Index>(i)) = r.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

DeadZoneMask DeadZoneMask::ones(std::size_t rows) {
  DeadZoneMask m;
  m.r = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(rows), kJoints);
  return m;
}

Vec3 joint_sigma(const Dataset& ds) {
  if (ds.empty()) throw InvalidInput("joint_sigma: empty dataset");
  // Welford keeps the single pass accurate for large offsets.
  Vec3 mean = Vec3::Zero();
  Vec3 m2 = Vec3::Zero();
  double n = 0.0;
  for (const auto& s : ds.samples) {
    n += 1.0;
    const Vec3 delta = s.dq - mean;
    mean += delta / n;
    m2 += delta.cwiseProduct(s.dq - mean);
  }
  return (m2 / n).cwiseSqrt();
}

DeadZoneMask compute_mask(const Dataset& ds, const Vec3& sigma, const MaskConfig& cfg) {
  cfg.validate();
  if ((sigma.array() < 0).any() || !sigma.allFinite()) {
    throw InvalidInput("sigma must be finite and non-negative");
  }
  DeadZoneMask m;
  m.sigma = sigma;
  m.r.resize(static_cast<Eigen::Index>(ds.size()), kJoints);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < kJoints; ++j) {
      // Boundary belongs to the dead zone.
      m.r(static_cast<Eigen::Index>(i), j) =
          std::abs(ds.samples[i].dq[j]) <= cfg.alpha * sigma[j] ? 0.0 : 1.0;
    }
  }
  return m;
}

MovingStats moving_stats(const DeadZoneMask& m) {
  if (m.size() == 0) throw InvalidInput("moving_stats: empty mask");
  MovingStats s;
  s.rows = m.size();
  s.per_joint = m.r.colwise().sum().transpose() / static_cast<double>(s.rows);
  for (std::size_t i = 0; i < s.rows; ++i) {
    if (m.all_moving(i)) ++s.all_moving_rows;
  }
  s.all_moving = static_cast<double>(s.all_moving_rows) / static_cast<double>(s.rows);
  return s;
}

void write_mask_csv(const DeadZoneMask& m, const std::string& path) {
  CsvWriter out(path, {"r0", "r1", "r2"});
  for (Eigen::Index i = 0; i < m.r.rows(); ++i) {
    out.write_raw(std::to_string(static_cast<int>(m.r(i, 0))) + "," +
                  std::to_string(static_cast<int>(m.r(i, 1))) + "," +
                  std::to_string(static_cast<int>(m.r(i, 2))));
  }
  out.close();
}

DeadZoneMask read_mask_csv(const std::string& path, const Vec3& sigma) {
  const CsvTable t = read_csv(path);
  std::array<std::size_t, kJoints> c{t.column_index("r0"), t.column_index("r1"),
                                     t.column_index("r2")};
  DeadZoneMask m;
  m.sigma = sigma;
  m.r.resize(static_cast<Eigen::Index>(t.rows.size()), kJoints);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (int j = 0; j < kJoints; ++j) {
      const double v = t.rows[i][c[j]];
      if (v != 0.0 && v != 1.0) throw DataError(path + ": mask entries must be 0 or 1");
      m.r(static_cast<Eigen::Index>(i), j) = v;
    }
  }
  return m;
}

}  // namespace dzid
