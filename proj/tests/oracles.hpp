#pragma once

// Reference computations written independently of the library code paths.

#include <algorithm>
#include <cmath>
#include <vector>

#include "dzid/mlp.hpp"

namespace dzid::oracle {

// Scalar loops over the layer list, no Eigen products.
inline std::vector<double> forward(const MlpModel& m, const std::vector<double>& input) {
  std::vector<double> a = input;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& w = m.layers[l].weight;
    std::vector<double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index o = 0; o < w.rows(); ++o) {
      double s = m.layers[l].bias[o];
      for (Eigen::Index i = 0; i < w.cols(); ++i) s += w(o, i) * a[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = (l + 1 < m.layers.size()) ? std::max(s, 0.0) : s;
    }
    a = std::move(z);
  }
  return a;
}

inline double mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  }
  return s / static_cast<double>(a.size());
}

inline double masked_loss(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          const Eigen::MatrixXd& r) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<double> in(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) in[static_cast<std::size_t>(c)] = x(i, c);
    const auto out = forward(m, in);
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const double e = y(i, j) - out[static_cast<std::size_t>(j)];
      s += r(i, j) * e * e;
    }
  }
  return s / static_cast<double>(x.rows() * y.cols());
}

// Central differences of the masked loss in the flattened parameter space.
// The loss is evaluated in long double so the difference quotient is not
// limited by double roundoff (about eps * loss / h) on small entries.
namespace detail {
struct WideLayer {
  std::vector<long double> w;  // column-major, rows x cols
  std::vector<long double> b;
  Eigen::Index rows = 0, cols = 0;
};

inline long double wide_loss(const std::vector<WideLayer>& net, const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& y, const Eigen::MatrixXd& r) {
  long double s = 0.0L;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<long double> a(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) a[static_cast<std::size_t>(c)] = x(i, c);
    for (std::size_t l = 0; l < net.size(); ++l) {
      const auto& L = net[l];
      std::vector<long double> z(static_cast<std::size_t>(L.rows));
      for (Eigen::Index o = 0; o < L.rows; ++o) {
        long double v = L.b[static_cast<std::size_t>(o)];
        for (Eigen::Index c = 0; c < L.cols; ++c) {
          v += L.w[static_cast<std::size_t>(c * L.rows + o)] * a[static_cast<std::size_t>(c)];
        }
        z[static_cast<std::size_t>(o)] = (l + 1 < net.size()) ? std::max(v, 0.0L) : v;
      }
      a = std::move(z);
    }
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const long double e = y(i, j) - a[static_cast<std::size_t>(j)];
      s += r(i, j) * e * e;
    }
  }
  return s / static_cast<long double>(x.rows() * y.cols());
}
}  // namespace detail

inline Eigen::VectorXd numeric_gradient(const MlpModel& model, const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& y, const Eigen::MatrixXd& r,
                                        double h = 1e-6) {
  std::vector<detail::WideLayer> net;
  std::vector<long double*> slots;  // flatten order: weights then bias, per layer
  for (const auto& l : model.layers) {
    detail::WideLayer w;
    w.rows = l.weight.rows();
    w.cols = l.weight.cols();
    w.w.assign(l.weight.data(), l.weight.data() + l.weight.size());
    w.b.assign(l.bias.data(), l.bias.data() + l.bias.size());
    net.push_back(std::move(w));
  }
  for (auto& l : net) {
    for (auto& v : l.w) slots.push_back(&v);
    for (auto& v : l.b) slots.push_back(&v);
  }
  Eigen::VectorXd g(static_cast<Eigen::Index>(slots.size()));
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const long double base = *slots[k];
    *slots[k] = base + h;
    const long double up = detail::wide_loss(net, x, y, r);
    *slots[k] = base - h;
    const long double down = detail::wide_loss(net, x, y, r);
    *slots[k] = base;
    g[static_cast<Eigen::Index>(k)] = static_cast<double>((up - down) / (2.0L * h));
  }
  return g;
}

// Largest entrywise relative error; `floor` only guards exact zeros.
inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), floor});
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

// Least squares by the normal equations, solved with an LDLT factorization.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::VectorXd atb = a.transpose() * b;
  return ata.ldlt().solve(atb);
}

}  // namespace dzid::oracle
