#pragma once

// Feed-forward regressor for inverse dynamics with the dead-zone masked loss
//
//   L = 1/n * sum_i 1/J * sum_j r_ij (tau_ij - tau_hat_ij)^2
//
// A masked joint contributes nothing to the loss, so its output error is
// zeroed before backpropagation. With r all ones L is the ordinary MSE.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dzid/common.hpp"

namespace dzid {

enum class TrainMode { Proposed, Conventional };

const char* to_string(TrainMode m);
TrainMode parse_train_mode(const std::string& s);  // throws UsageError

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct MlpModel {
  // Rectifier on every hidden layer, identity on the output layer.
  std::vector<DenseLayer> layers;

  int best_epoch = 0;
  double best_val_mse = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Proposed;
  std::size_t train_rows = 0;

  // sizes = {inputs, hidden..., outputs}; all parameters zero.
  static MlpModel zeros(const std::vector<int>& sizes);
  // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  static MlpModel initialized(const std::vector<int>& sizes, std::uint64_t seed);

  std::vector<int> sizes() const;
  int inputs() const { return static_cast<int>(layers.front().weight.cols()); }
  int outputs() const { return static_cast<int>(layers.back().weight.rows()); }
  Eigen::Index parameter_count() const;

  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);

  void save(const std::string& path) const;
  static MlpModel load(const std::string& path);
};

// Single-sample forward pass.
Eigen::VectorXd forward(const MlpModel& model, const Eigen::VectorXd& input);

// Batched forward pass: rows of x are samples.
Eigen::MatrixXd predict(const MlpModel& model, const Eigen::MatrixXd& x);

double masked_loss(const Eigen::MatrixXd& target, const Eigen::MatrixXd& predicted,
                   const Eigen::MatrixXd& mask);

// Exact gradient of masked_loss(target, predict(model, x), mask), laid out like
// MlpModel::flatten().
Eigen::VectorXd backward(const MlpModel& model, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& target, const Eigen::MatrixXd& mask);

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  static AdamState zeros(Eigen::Index n);
};

// One bias-corrected Adam update of `params` in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamConfig& cfg);

struct TrainConfig {
  AdamConfig adam{};
  int epochs = 100;
  int batch_size = 64;
  std::vector<int> hidden{64};
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::Proposed;

  void validate() const;
};

struct TrainResult {
  MlpModel model;                  // snapshot of the best validation epoch
  std::vector<double> val_history; // validation MSE after each epoch
};

// Inputs are expected to be standardized already; targets are raw torque.
// Conventional mode keeps only rows whose mask is all ones and then trains on
// plain MSE; proposed mode keeps every row with its mask. Validation MSE is
// plain MSE over every entry.
TrainResult train(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                  const Eigen::MatrixXd& mask, const Eigen::MatrixXd& x_val,
                  const Eigen::MatrixXd& y_val, const TrainConfig& cfg);

// Mean squared error per output column.
Eigen::VectorXd column_mse(const Eigen::MatrixXd& target, const Eigen::MatrixXd& predicted);

}  // namespace dzid
