#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntsn/acyclicity.hpp"
#include "ntsn/rng.hpp"

namespace ntsn {

// All trainable parameters of one child variable's CNN. Kernels are kept
// as a nonnegative split phi = phi_pos - phi_neg so the L1 penalty is a
// linear (smooth) function of the stored parameters; nonnegativity is
// enforced through optimizer bounds.
//
// Kernel matrices are m x (d*(K+1)); column c = lag*d + i addresses input
// variable i at the given lag, lag 0 being the intra-slice column.
struct ChildModelParams {
  Eigen::MatrixXd phi_pos;
  Eigen::MatrixXd phi_neg;
  Eigen::VectorXd conv_bias;       // m
  Eigen::MatrixXd hidden_weights;  // hidden_width x m
  Eigen::VectorXd hidden_bias;     // hidden_width
  Eigen::VectorXd output_weights;  // hidden_width
  double output_bias = 0.0;
};

struct ModelSet {
  std::vector<ChildModelParams> children;
  int d = 0;
  int max_lag = 0;      // K
  int kernels = 0;      // m
  int hidden_width = 0;
};

struct Hyperparams {
  std::vector<double> lambda1;      // per-lag L1 strength, index 0 = intra
  double lambda2 = 0.05;
  int max_lag = 1;                  // K
  int kernels = 0;                  // m; 0 means "use d" at fit time
  int hidden_width = 0;             // 0 means "use m"
  std::vector<double> thresholds;   // per-lag pruning threshold
  double rho_init = 1.0;
  double rho_max = 1e16;
  double alpha_init = 0.0;
  double progress_ratio = 0.25;
  double h_tolerance = 1e-8;
  int max_outer_iterations = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_lag < 1) throw std::runtime_error("Hyperparams: max_lag must be >= 1");
    if (lambda2 < 0) throw std::runtime_error("Hyperparams: lambda2 must be >= 0");
    for (double v : lambda1)
      if (v < 0) throw std::runtime_error("Hyperparams: lambda1 must be >= 0");
    for (double v : thresholds)
      if (v < 0) throw std::runtime_error("Hyperparams: thresholds must be >= 0");
    if (progress_ratio <= 0 || progress_ratio >= 1)
      throw std::runtime_error("Hyperparams: progress_ratio must be in (0,1)");
    if (h_tolerance <= 0 || rho_init < 0 || rho_max <= 0 || max_outer_iterations < 1)
      throw std::runtime_error("Hyperparams: invalid augmented-Lagrangian schedule");
  }

  // lambda1/thresholds given as a scalar apply to every lag
  std::vector<double> lambda1_per_lag() const {
    if (lambda1.size() == 1) return std::vector<double>(static_cast<std::size_t>(max_lag + 1), lambda1[0]);
    if (static_cast<int>(lambda1.size()) != max_lag + 1)
      throw std::runtime_error("Hyperparams: lambda1 needs 1 or K+1 entries");
    return lambda1;
  }
  std::vector<double> thresholds_per_lag() const {
    if (thresholds.size() == 1) return std::vector<double>(static_cast<std::size_t>(max_lag + 1), thresholds[0]);
    if (static_cast<int>(thresholds.size()) != max_lag + 1)
      throw std::runtime_error("Hyperparams: thresholds needs 1 or K+1 entries");
    return thresholds;
  }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace shape {

inline Eigen::Index kernel_cols(int d, int max_lag) {
  return static_cast<Eigen::Index>(d) * (max_lag + 1);
}

// kernel matrix column for (variable i, lag)
inline Eigen::Index kernel_col(int d, int lag, int i) {
  return static_cast<Eigen::Index>(lag) * d + i;
}

inline Eigen::Index params_per_child(int d, int max_lag, int m, int hidden) {
  const Eigen::Index cols = kernel_cols(d, max_lag);
  return 2 * m * cols + m + static_cast<Eigen::Index>(hidden) * m + hidden + hidden + 1;
}

inline Eigen::Index total_params(int d, int max_lag, int m, int hidden) {
  return static_cast<Eigen::Index>(d) * params_per_child(d, max_lag, m, hidden);
}

}  // namespace shape

// Flat layout per child: [phi_pos | phi_neg | conv_bias | hidden_weights |
// hidden_bias | output_weights | output_bias], matrices column-major.
inline Eigen::VectorXd pack(const ModelSet& models) {
  const Eigen::Index per = shape::params_per_child(models.d, models.max_lag, models.kernels,
                                                   models.hidden_width);
  Eigen::VectorXd x(per * models.d);
  Eigen::Index off = 0;
  for (const auto& c : models.children) {
    auto put_mat = [&](const Eigen::MatrixXd& mat) {
      x.segment(off, mat.size()) = Eigen::Map<const Eigen::VectorXd>(mat.data(), mat.size());
      off += mat.size();
    };
    auto put_vec = [&](const Eigen::VectorXd& v) {
      x.segment(off, v.size()) = v;
      off += v.size();
    };
    put_mat(c.phi_pos);
    put_mat(c.phi_neg);
    put_vec(c.conv_bias);
    put_mat(c.hidden_weights);
    put_vec(c.hidden_bias);
    put_vec(c.output_weights);
    x(off++) = c.output_bias;
  }
  return x;
}

inline ModelSet unpack(const Eigen::VectorXd& x, int d, int max_lag, int m, int hidden) {
  if (x.size() != shape::total_params(d, max_lag, m, hidden))
    throw std::runtime_error("unpack: parameter vector has wrong length");
  ModelSet models;
  models.d = d;
  models.max_lag = max_lag;
  models.kernels = m;
  models.hidden_width = hidden;
  const Eigen::Index cols = shape::kernel_cols(d, max_lag);
  Eigen::Index off = 0;
  for (int j = 0; j < d; ++j) {
    ChildModelParams c;
    auto get_mat = [&](Eigen::Index r, Eigen::Index cc) {
      Eigen::MatrixXd mat = Eigen::Map<const Eigen::MatrixXd>(x.data() + off, r, cc);
      off += r * cc;
      return mat;
    };
    auto get_vec = [&](Eigen::Index nn) {
      Eigen::VectorXd v = x.segment(off, nn);
      off += nn;
      return v;
    };
    c.phi_pos = get_mat(m, cols);
    c.phi_neg = get_mat(m, cols);
    c.conv_bias = get_vec(m);
    c.hidden_weights = get_mat(hidden, m);
    c.hidden_bias = get_vec(hidden);
    c.output_weights = get_vec(hidden);
    c.output_bias = x(off++);
    models.children.push_back(std::move(c));
  }
  return models;
}

// Kernel halves start uniform on [0, 1/sqrt(m*d*(K+1))], MLP weights
// uniform on +-1/sqrt(fan_in), biases zero. The child's own intra-slice
// kernel column is zeroed (and stays pinned at zero via bounds).
inline ModelSet init_params(int d, int max_lag, int m, int hidden, std::uint64_t seed) {
  if (d < 2 || max_lag < 1 || m < 1 || hidden < 1)
    throw std::runtime_error("init_params: invalid dimensions");
  Rng rng(seed);
  ModelSet models;
  models.d = d;
  models.max_lag = max_lag;
  models.kernels = m;
  models.hidden_width = hidden;
  const Eigen::Index cols = shape::kernel_cols(d, max_lag);
  const double kernel_scale = 1.0 / std::sqrt(static_cast<double>(m) * d * (max_lag + 1));
  for (int j = 0; j < d; ++j) {
    ChildModelParams c;
    c.phi_pos.resize(m, cols);
    c.phi_neg.resize(m, cols);
    for (Eigen::Index cc = 0; cc < cols; ++cc)
      for (int b = 0; b < m; ++b) c.phi_pos(b, cc) = rng.uniform(0.0, kernel_scale);
    for (Eigen::Index cc = 0; cc < cols; ++cc)
      for (int b = 0; b < m; ++b) c.phi_neg(b, cc) = rng.uniform(0.0, kernel_scale);
    const Eigen::Index self = shape::kernel_col(d, 0, j);
    c.phi_pos.col(self).setZero();
    c.phi_neg.col(self).setZero();
    c.conv_bias = Eigen::VectorXd::Zero(m);
    const double a1_scale = 1.0 / std::sqrt(static_cast<double>(m));
    c.hidden_weights.resize(hidden, m);
    for (int cc = 0; cc < m; ++cc)
      for (int r = 0; r < hidden; ++r) c.hidden_weights(r, cc) = rng.uniform(-a1_scale, a1_scale);
    c.hidden_bias = Eigen::VectorXd::Zero(hidden);
    const double ow_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    c.output_weights.resize(hidden);
    for (int r = 0; r < hidden; ++r) c.output_weights(r) = rng.uniform(-ow_scale, ow_scale);
    // cancel the zero-input constant so the initial prediction is centered;
    // an uncentered start makes "shrink the output layer to zero" the
    // steepest descent path and the ridge then locks in that saddle
    const Eigen::VectorXd a0 = Eigen::VectorXd::Constant(m, 0.5);
    const Eigen::VectorXd h0 =
        (c.hidden_weights * a0 + c.hidden_bias).unaryExpr([](double v) { return sigmoid(v); });
    c.output_bias = -c.output_weights.dot(h0);
    models.children.push_back(std::move(c));
  }
  return models;
}

// window is d x (K+1); column K (rightmost) is the instantaneous slice.
inline double forward(const ChildModelParams& child, const Eigen::MatrixXd& window) {
  const Eigen::Index m = child.phi_pos.rows();
  const Eigen::Index cols = child.phi_pos.cols();
  const Eigen::Index d = window.rows();
  const Eigen::Index lags = window.cols();  // K+1
  if (d * lags != cols) throw std::runtime_error("forward: window dimension mismatch");

  Eigen::VectorXd design(cols);
  for (Eigen::Index lag = 0; lag < lags; ++lag)
    for (Eigen::Index i = 0; i < d; ++i)
      design(lag * d + i) = window(i, lags - 1 - lag);

  Eigen::VectorXd z = (child.phi_pos - child.phi_neg) * design + child.conv_bias;
  Eigen::VectorXd a = z.unaryExpr([](double v) { return sigmoid(v); });
  Eigen::VectorXd g = child.hidden_weights * a + child.hidden_bias;
  Eigen::VectorXd h = g.unaryExpr([](double v) { return sigmoid(v); });
  (void)m;
  return child.output_weights.dot(h) + child.output_bias;
}

// W[k](i,j) = L2 norm over kernels of the effective column (i, lag k) of
// child j; intra-slice diagonal is zero by the self-loop mask.
struct WeightTensorView;  // fwd decl only if needed

inline std::vector<Eigen::MatrixXd> extract_adjacency_matrices(const ModelSet& models) {
  std::vector<Eigen::MatrixXd> w(static_cast<std::size_t>(models.max_lag + 1),
                                 Eigen::MatrixXd::Zero(models.d, models.d));
  for (int j = 0; j < models.d; ++j) {
    const Eigen::MatrixXd eff = models.children[static_cast<std::size_t>(j)].phi_pos -
                                models.children[static_cast<std::size_t>(j)].phi_neg;
    for (int k = 0; k <= models.max_lag; ++k)
      for (int i = 0; i < models.d; ++i)
        w[static_cast<std::size_t>(k)](i, j) = eff.col(shape::kernel_col(models.d, k, i)).norm();
  }
  return w;
}

// S(i,j) = squared L2 norm of child j's intra-slice column for parent i;
// smooth in the parameters (no square root).
inline Eigen::MatrixXd intra_squared_matrix(const ModelSet& models) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(models.d, models.d);
  for (int j = 0; j < models.d; ++j) {
    const Eigen::MatrixXd eff = models.children[static_cast<std::size_t>(j)].phi_pos -
                                models.children[static_cast<std::size_t>(j)].phi_neg;
    for (int i = 0; i < models.d; ++i)
      s(i, j) = eff.col(shape::kernel_col(models.d, 0, i)).squaredNorm();
  }
  return s;
}

}  // namespace ntsn
