#pragma once

// 500 Hz log -> 50 Hz training samples.
//
// Filters are backward-Euler first-order sections. With a = dt*w/(1+dt*w):
//   lowpass:     y_k = y_{k-1} + a (x_k - y_{k-1}),  y_0 = x_0
//   pseudo_diff: w (x_k - lowpass(x)_k)
// pseudo_diff equals lowpass applied to the backward difference, so every
// channel of a sample carries the same two poles of phase lag:
//   q   : lowpass^2
//   dq  : lowpass(pseudo_diff(q))
//   ddq : pseudo_diff(pseudo_diff(q))
//   tau : lowpass^2

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dzid/dataset.hpp"
#include "dzid/deadzone.hpp"
#include "dzid/simulator.hpp"

namespace dzid {

struct FilterConfig {
  double cutoff = 25.0;  // [rad/s]
  int angle_passes = 2;
  int velocity_passes = 1;
  int torque_passes = 2;
  double output_rate = 50.0;  // [Hz]
  double warmup = 2.0;        // [s] excluded from splitting

  void validate() const;
};

std::vector<double> lowpass(std::span<const double> signal, double cutoff, double dt);
std::vector<double> pseudo_diff(std::span<const double> signal, double cutoff, double dt);

// Output length is floor(log length / decimation). A trailing remainder is
// dropped with a warning.
Dataset build_dataset(const TrajectoryLog& log, const FilterConfig& filters = {});

struct SplitConfig {
  std::size_t train = 6000;
  std::size_t val = 500;
  std::size_t test = 500;
  std::size_t segment = 150;  // 3 s at 50 Hz
};

struct Split {
  std::vector<std::size_t> train, val, test;
  std::size_t segment_begin = 0;  // segment = [begin, begin + cfg.segment)
  std::size_t segment_size = 0;

  std::vector<std::size_t> segment_indices() const;
};

// Reserves a contiguous segment first, then draws val and test from rows
// where every joint is moving, then train from whatever remains. Warm-up rows
// are never used. Index lists are returned in ascending order.
Split split_dataset(const Dataset& ds, const DeadZoneMask& mask, std::uint64_t seed,
                    const SplitConfig& cfg = {});

// Uniform subset without replacement, in drawn order. `picked` receives the
// source indices.
Dataset subsample(const Dataset& train, std::size_t k, std::uint64_t seed,
                  std::vector<std::size_t>* picked = nullptr);

// Per-input-channel z-score. Targets are never scaled.
class Scaler {
 public:
  Scaler() = default;
  Scaler(Eigen::VectorXd mean, Eigen::VectorXd scale);

  static Scaler fit(const Dataset& train);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& z) const;
  Eigen::MatrixXd transform(const Dataset& ds) const { return transform(input_matrix(ds)); }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }
  int channels() const { return static_cast<int>(mean_.size()); }

  void save(const std::string& path) const;
  static Scaler load(const std::string& path);

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

}  // namespace dzid
