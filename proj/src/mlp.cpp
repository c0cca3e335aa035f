#include "dzid/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dzid/log.hpp"

namespace dzid {

const char* to_string(TrainMode m) {
  return m == TrainMode::Proposed ? "proposed" : "conventional";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "proposed") return TrainMode::Proposed;
  if (s == "conventional") return TrainMode::Conventional;
  throw UsageError("unknown training mode '" + s + "' (expected proposed|conventional)");
}

MlpModel MlpModel::zeros(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw InvalidInput("MlpModel: need at least input and output sizes");
  MlpModel m;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    if (sizes[l] <= 0 || sizes[l - 1] <= 0) throw InvalidInput("MlpModel: layer sizes must be positive");
    m.layers.push_back({Eigen::MatrixXd::Zero(sizes[l], sizes[l - 1]), Eigen::VectorXd::Zero(sizes[l])});
  }
  return m;
}

MlpModel MlpModel::initialized(const std::vector<int>& sizes, std::uint64_t seed) {
  MlpModel m = zeros(sizes);
  m.seed = seed;
  Rng rng(hash_combine(seed, 0x1417ull));
  for (auto& layer : m.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    }
  }
  return m;
}

std::vector<int> MlpModel::sizes() const {
  std::vector<int> s;
  if (layers.empty()) return s;
  s.push_back(static_cast<int>(layers.front().weight.cols()));
  for (const auto& l : layers) s.push_back(static_cast<int>(l.weight.rows()));
  return s;
}

Eigen::Index MlpModel::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

Eigen::VectorXd MlpModel::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index o = 0;
  for (const auto& l : layers) {
    flat.segment(o, l.weight.size()) = Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size());
    o += l.weight.size();
    flat.segment(o, l.bias.size()) = l.bias;
    o += l.bias.size();
  }
  return flat;
}

void MlpModel::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) throw InvalidInput("MlpModel::assign: size mismatch");
  Eigen::Index o = 0;
  for (auto& l : layers) {
    Eigen::Map<Eigen::VectorXd>(l.weight.data(), l.weight.size()) = flat.segment(o, l.weight.size());
    o += l.weight.size();
    l.bias = flat.segment(o, l.bias.size());
    o += l.bias.size();
  }
}

void MlpModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file " + path);
  out << "dzid-mlp v1";
  for (int s : sizes()) out << ' ' << s;
  out << '\n';
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        out << (c ? " " : "") << format_double(l.weight(r, c));
      }
      out << '\n';
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out << (r ? " " : "") << format_double(l.bias[r]);
    out << '\n';
  }
  out << "best_epoch=" << best_epoch << '\n';
  out << "best_val_mse=" << format_double(best_val_mse) << '\n';
  out << "seed=" << seed << '\n';
  out << "mode=" << to_string(mode) << '\n';
  out << "train_rows=" << train_rows << '\n';
  if (!out) throw DataError("write failed: " + path);
}

MlpModel MlpModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path);
  std::string line;
  std::getline(in, line);
  std::istringstream head(line);
  std::string magic, version;
  head >> magic >> version;
  if (magic != "dzid-mlp" || version != "v1") throw DataError(path + ": not a dzid-mlp v1 file");
  std::vector<int> sizes;
  for (int s; head >> s;) sizes.push_back(s);
  MlpModel m = zeros(sizes);

  const auto read_values = [&](Eigen::Index expected) {
    if (!std::getline(in, line)) throw DataError(path + ": truncated model file");
    std::istringstream row(line);
    std::vector<double> v;
    for (std::string tok; row >> tok;) v.push_back(std::stod(tok));
    if (static_cast<Eigen::Index>(v.size()) != expected) throw DataError(path + ": bad row width");
    return v;
  };
  for (auto& l : m.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      const auto v = read_values(l.weight.cols());
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = v[c];
    }
    const auto b = read_values(l.bias.size());
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = b[r];
  }
  std::ostringstream rest;
  rest << in.rdbuf();
  const KeyValueFile kv = KeyValueFile::parse(rest.str(), path);
  m.best_epoch = static_cast<int>(kv.get_int("best_epoch", 0));
  m.best_val_mse = kv.get_double("best_val_mse", std::numeric_limits<double>::quiet_NaN());
  m.seed = kv.get_u64("seed", 0);
  m.mode = parse_train_mode(kv.get_string("mode", "proposed"));
  m.train_rows = static_cast<std::size_t>(kv.get_u64("train_rows", 0));
  return m;
}

Eigen::VectorXd forward(const MlpModel& model, const Eigen::VectorXd& input) {
  if (input.size() != model.inputs()) {
    throw InvalidInput("forward: expected " + std::to_string(model.inputs()) + " inputs, got " +
                       std::to_string(input.size()));
  }
  Eigen::VectorXd a = input;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    a = layer.weight * a + layer.bias;
    if (l + 1 < model.layers.size()) a = a.cwiseMax(0.0);
  }
  return a;
}

Eigen::MatrixXd predict(const MlpModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.inputs()) {
    throw InvalidInput("predict: expected " + std::to_string(model.inputs()) + " input channels, got " +
                       std::to_string(x.cols()));
  }
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    Eigen::MatrixXd z = a * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    a = (l + 1 < model.layers.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

double masked_loss(const Eigen::MatrixXd& target, const Eigen::MatrixXd& predicted,
                   const Eigen::MatrixXd& mask) {
  if (target.rows() != predicted.rows() || target.cols() != predicted.cols() ||
      mask.rows() != target.rows() || mask.cols() != target.cols()) {
    throw InvalidInput("masked_loss: shape mismatch");
  }
  if (target.rows() == 0) throw InvalidInput("masked_loss: empty batch");
  const double n = static_cast<double>(target.rows());
  const double joints = static_cast<double>(target.cols());
  return (mask.array() * (target - predicted).array().square()).sum() / (n * joints);
}

Eigen::VectorXd backward(const MlpModel& model, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& target, const Eigen::MatrixXd& mask) {
  const std::size_t depth = model.layers.size();
  std::vector<Eigen::MatrixXd> act(depth + 1);  // act[l] feeds layer l
  std::vector<Eigen::MatrixXd> pre(depth);
  if (x.cols() != model.inputs()) throw InvalidInput("backward: input width mismatch");
  act[0] = x;
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& layer = model.layers[l];
    pre[l] = act[l] * layer.weight.transpose();
    pre[l].rowwise() += layer.bias.transpose();
    act[l + 1] = (l + 1 < depth) ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
  }
  const Eigen::MatrixXd& out = act[depth];
  if (target.rows() != out.rows() || target.cols() != out.cols() || mask.rows() != out.rows() ||
      mask.cols() != out.cols()) {
    throw InvalidInput("backward: shape mismatch");
  }
  const double n = static_cast<double>(out.rows());
  const double joints = static_cast<double>(out.cols());

  // Masked joints have zero output error: nothing propagates from them.
  Eigen::MatrixXd delta = (2.0 / (n * joints)) * mask.cwiseProduct(out - target);

  Eigen::VectorXd grad(model.parameter_count());
  std::vector<Eigen::Index> offset(depth);
  Eigen::Index o = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    offset[l] = o;
    o += model.layers[l].weight.size() + model.layers[l].bias.size();
  }
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = model.layers[l];
    const Eigen::MatrixXd gw = delta.transpose() * act[l];
    grad.segment(offset[l], gw.size()) = Eigen::Map<const Eigen::VectorXd>(gw.data(), gw.size());
    grad.segment(offset[l] + gw.size(), layer.bias.size()) = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * layer.weight).cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

AdamState AdamState::zeros(Eigen::Index n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(n);
  s.v = Eigen::VectorXd::Zero(n);
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamConfig& cfg) {
  if (grad.size() != params.size() || state.m.size() != params.size()) {
    throw InvalidInput("adam_step: size mismatch");
  }
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= cfg.learning_rate * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + cfg.epsilon);
}

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
  if (epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (batch_size < 1) throw InvalidInput("batch size must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw InvalidInput("hidden layer sizes must be positive");
  }
}

Eigen::VectorXd column_mse(const Eigen::MatrixXd& target, const Eigen::MatrixXd& predicted) {
  if (target.rows() != predicted.rows() || target.cols() != predicted.cols() || target.rows() == 0) {
    throw InvalidInput("column_mse: shape mismatch");
  }
  return (target - predicted).array().square().colwise().mean().transpose();
}

namespace {

double plain_mse(const Eigen::MatrixXd& target, const Eigen::MatrixXd& predicted) {
  return (target - predicted).array().square().mean();
}

}  // namespace

TrainResult train(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                  const Eigen::MatrixXd& mask, const Eigen::MatrixXd& x_val,
                  const Eigen::MatrixXd& y_val, const TrainConfig& cfg) {
  cfg.validate();
  if (x_train.rows() != y_train.rows() || mask.rows() != y_train.rows() ||
      mask.cols() != y_train.cols()) {
    throw InvalidInput("train: training matrices disagree in shape");
  }
  if (x_val.rows() == 0 || x_val.rows() != y_val.rows()) throw InvalidInput("train: bad validation set");

  // Effective training rows.
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < x_train.rows(); ++i) {
    if (cfg.mode == TrainMode::Proposed || mask.row(i).minCoeff() > 0.5) rows.push_back(i);
  }
  if (rows.empty()) {
    throw DataError(std::string("train (") + to_string(cfg.mode) + "): no usable training rows out of " +
                    std::to_string(x_train.rows()));
  }
  const Eigen::Index n_rows = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n_rows, x_train.cols()), y(n_rows, y_train.cols()), r(n_rows, y_train.cols());
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    x.row(i) = x_train.row(rows[i]);
    y.row(i) = y_train.row(rows[i]);
    r.row(i) = cfg.mode == TrainMode::Proposed ? Eigen::RowVectorXd(mask.row(rows[i]))
                                               : Eigen::RowVectorXd::Ones(y_train.cols());
  }
  spdlog::debug("train ({}): {} of {} rows used", to_string(cfg.mode), n_rows, x_train.rows());

  std::vector<int> sizes{static_cast<int>(x.cols())};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(static_cast<int>(y.cols()));
  MlpModel model = MlpModel::initialized(sizes, cfg.seed);
  model.mode = cfg.mode;
  model.train_rows = static_cast<std::size_t>(n_rows);

  Eigen::VectorXd params = model.flatten();
  AdamState adam = AdamState::zeros(params.size());
  Rng rng(hash_combine(cfg.seed, 0x5A0FF1Eull));
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n_rows);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_rows));
  for (Eigen::Index i = 0; i < n_rows; ++i) order[static_cast<std::size_t>(i)] = i;

  TrainResult result;
  result.model = model;
  result.model.best_val_mse = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd xb, yb, rb;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (Eigen::Index start = 0; start < n_rows; start += batch) {
      const Eigen::Index len = std::min(batch, n_rows - start);
      xb.resize(len, x.cols());
      yb.resize(len, y.cols());
      rb.resize(len, y.cols());
      for (Eigen::Index i = 0; i < len; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x.row(src);
        yb.row(i) = y.row(src);
        rb.row(i) = r.row(src);
      }
      const Eigen::VectorXd grad = backward(model, xb, yb, rb);
      adam_step(params, grad, adam, cfg.adam);
      model.assign(params);
    }
    const double val = plain_mse(y_val, predict(model, x_val));
    if (!std::isfinite(val)) {
      throw NumericalError("train: validation MSE became non-finite at epoch " + std::to_string(epoch));
    }
    result.val_history.push_back(val);
    if (val < result.model.best_val_mse) {
      result.model.layers = model.layers;
      result.model.best_val_mse = val;
      result.model.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace dzid
