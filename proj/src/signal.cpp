#include "dzid/signal.hpp"

#include <algorithm>
#include <cmath>

#include "dzid/common.hpp"
#include "dzid/log.hpp"

namespace dzid {

void FilterConfig::validate() const {
  if (!(cutoff > 0.0)) throw InvalidInput("filter cutoff must be positive");
  if (angle_passes < 0 || velocity_passes < 0 || torque_passes < 0) {
    throw InvalidInput("filter pass counts must be >= 0");
  }
  if (!(output_rate > 0.0)) throw InvalidInput("output rate must be positive");
  if (!(warmup >= 0.0)) throw InvalidInput("warm-up must be >= 0");
}

namespace {

void check_filter_args(std::span<const double> signal, double cutoff, double dt) {
  if (signal.empty()) throw InvalidInput("filter: empty signal");
  if (!(dt > 0.0)) throw InvalidInput("filter: dt must be positive");
  if (!(cutoff > 0.0) || !(cutoff * dt < 1.0)) {
    throw InvalidInput("filter: need cutoff > 0 and cutoff * dt < 1");
  }
}

std::vector<double> lowpass_n(std::vector<double> x, int passes, double cutoff, double dt) {
  for (int p = 0; p < passes; ++p) x = lowpass(x, cutoff, dt);
  return x;
}

std::vector<double> channel(const std::vector<Vec3>& v, int j) {
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = v[k][j];
  return out;
}

}  // namespace

std::vector<double> lowpass(std::span<const double> signal, double cutoff, double dt) {
  check_filter_args(signal, cutoff, dt);
  const double a = dt * cutoff / (1.0 + dt * cutoff);
  std::vector<double> y(signal.size());
  y[0] = signal[0];
  for (std::size_t k = 1; k < signal.size(); ++k) y[k] = y[k - 1] + a * (signal[k] - y[k - 1]);
  return y;
}

std::vector<double> pseudo_diff(std::span<const double> signal, double cutoff, double dt) {
  std::vector<double> y = lowpass(signal, cutoff, dt);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = cutoff * (signal[k] - y[k]);
  return y;
}

Dataset build_dataset(const TrajectoryLog& log, const FilterConfig& filters) {
  filters.validate();
  if (log.size() == 0) throw InvalidInput("build_dataset: empty log");
  const double dt = log.timestep;
  const double ratio = 1.0 / (dt * filters.output_rate);
  const auto decimation = static_cast<std::size_t>(std::llround(ratio));
  if (decimation == 0 || std::abs(ratio - static_cast<double>(decimation)) > 1e-6) {
    throw InvalidInput("build_dataset: log rate is not an integer multiple of the output rate");
  }
  const std::size_t out_n = log.size() / decimation;
  if (log.size() % decimation != 0) {
    spdlog::warn("build_dataset: dropping {} trailing samples (length {} not divisible by {})",
                 log.size() % decimation, log.size(), decimation);
  }

  std::array<std::vector<double>, kJoints> q, dq, ddq, tau;
  for (int j = 0; j < kJoints; ++j) {
    const std::vector<double> raw_q = channel(log.q, j);
    const std::vector<double> rate = pseudo_diff(raw_q, filters.cutoff, dt);
    q[j] = lowpass_n(raw_q, filters.angle_passes, filters.cutoff, dt);
    ddq[j] = pseudo_diff(rate, filters.cutoff, dt);
    dq[j] = lowpass_n(rate, filters.velocity_passes, filters.cutoff, dt);
    tau[j] = lowpass_n(channel(log.tau, j), filters.torque_passes, filters.cutoff, dt);
  }

  Dataset ds;
  ds.rate_hz = filters.output_rate;
  ds.tag = Provenance::Raw;
  ds.samples.resize(out_n);
  for (std::size_t i = 0; i < out_n; ++i) {
    const std::size_t k = i * decimation;
    auto& s = ds.samples[i];
    for (int j = 0; j < kJoints; ++j) {
      s.q[j] = q[j][k];
      s.dq[j] = dq[j][k];
      s.ddq[j] = ddq[j][k];
      s.tau[j] = tau[j][k];
    }
  }
  ds.warmup = std::min(out_n, static_cast<std::size_t>(std::ceil(filters.warmup * filters.output_rate - 1e-9)));
  return ds;
}

std::vector<std::size_t> Split::segment_indices() const {
  std::vector<std::size_t> out(segment_size);
  for (std::size_t i = 0; i < segment_size; ++i) out[i] = segment_begin + i;
  return out;
}

Split split_dataset(const Dataset& ds, const DeadZoneMask& mask, std::uint64_t seed,
                    const SplitConfig& cfg) {
  if (mask.size() != ds.size()) {
    throw InvalidInput("split_dataset: mask has " + std::to_string(mask.size()) +
                       " rows, dataset has " + std::to_string(ds.size()));
  }
  const std::size_t first = ds.warmup;
  const std::size_t usable = ds.size() > first ? ds.size() - first : 0;
  const std::size_t needed = cfg.segment + cfg.val + cfg.test + cfg.train;
  if (usable < needed) {
    throw DataError("split_dataset: " + std::to_string(usable) + " usable samples after warm-up, " +
                    std::to_string(needed) + " required");
  }

  Rng rng(hash_combine(seed, 0x5B117ull));
  Split split;
  split.segment_size = cfg.segment;
  split.segment_begin = first + static_cast<std::size_t>(rng.below(usable - cfg.segment + 1));

  std::vector<std::size_t> moving, rest;
  for (std::size_t i = first; i < ds.size(); ++i) {
    if (i >= split.segment_begin && i < split.segment_begin + cfg.segment) continue;
    (mask.all_moving(i) ? moving : rest).push_back(i);
  }
  if (moving.size() < cfg.val + cfg.test) {
    throw DataError("split_dataset: only " + std::to_string(moving.size()) +
                    " samples have every joint moving; validation + test need " +
                    std::to_string(cfg.val + cfg.test));
  }
  rng.shuffle(moving);
  split.val.assign(moving.begin(), moving.begin() + static_cast<std::ptrdiff_t>(cfg.val));
  split.test.assign(moving.begin() + static_cast<std::ptrdiff_t>(cfg.val),
                    moving.begin() + static_cast<std::ptrdiff_t>(cfg.val + cfg.test));
  rest.insert(rest.end(), moving.begin() + static_cast<std::ptrdiff_t>(cfg.val + cfg.test),
              moving.end());
  std::sort(rest.begin(), rest.end());
  rng.shuffle(rest);
  split.train.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(cfg.train));

  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Dataset subsample(const Dataset& train, std::size_t k, std::uint64_t seed,
                  std::vector<std::size_t>* picked) {
  if (k < 1 || k > train.size()) {
    throw InvalidInput("subsample: k = " + std::to_string(k) + " outside [1, " +
                       std::to_string(train.size()) + "]");
  }
  std::vector<std::size_t> idx(train.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(hash_combine(seed, 0x5AB5ull));
  // Partial Fisher-Yates: the first k slots are the draw.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  if (picked) *picked = idx;
  Dataset out = train.subset(idx, train.tag);
  return out;
}

Scaler::Scaler(Eigen::VectorXd mean, Eigen::VectorXd scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) throw InvalidInput("Scaler: mean/scale size mismatch");
}

Scaler Scaler::fit(const Dataset& train) {
  if (train.empty()) throw InvalidInput("Scaler::fit: empty dataset");
  const Eigen::MatrixXd x = input_matrix(train);
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd mean = x.colwise().mean().transpose();
  Eigen::VectorXd scale(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - mean[c]).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * std::max(1.0, std::abs(mean[c]))) {
      scale[c] = sd;
    } else {
      spdlog::warn("Scaler: input channel {} has zero variance; passing it through unscaled", c);
      mean[c] = 0.0;
      scale[c] = 1.0;
    }
  }
  return Scaler(mean, scale);
}

Eigen::MatrixXd Scaler::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean_.size()) {
    throw InvalidInput("Scaler: expected " + std::to_string(mean_.size()) + " channels, got " +
                       std::to_string(x.cols()));
  }
  return (x.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
}

Eigen::MatrixXd Scaler::inverse(const Eigen::MatrixXd& z) const {
  if (z.cols() != mean_.size()) throw InvalidInput("Scaler: channel count mismatch");
  Eigen::MatrixXd x = z.array().rowwise() * scale_.transpose().array();
  return x.rowwise() + mean_.transpose();
}

void Scaler::save(const std::string& path) const {
  KeyValueFile kv;
  kv.set("channels", std::to_string(mean_.size()));
  for (Eigen::Index c = 0; c < mean_.size(); ++c) {
    kv.set("mean" + std::to_string(c), format_double(mean_[c]));
    kv.set("std" + std::to_string(c), format_double(scale_[c]));
  }
  kv.save(path);
}

Scaler Scaler::load(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::load(path);
  const auto n = kv.get_int("channels", -1);
  if (n <= 0) throw DataError(path + ": missing channel count");
  Eigen::VectorXd mean(n), scale(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    mean[c] = kv.require_double("mean" + std::to_string(c));
    scale[c] = kv.require_double("std" + std::to_string(c));
  }
  return Scaler(mean, scale);
}

}  // namespace dzid
