#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ntsn/acyclicity.hpp"
#include "ntsn/dataset.hpp"
#include "ntsn/model.hpp"

namespace ntsn {

// Evaluates the full training objective and its exact analytic gradient
// over the flat parameter vector:
//
//   (1/(T-K)) sum_t sum_j (x_j^t - CNN_j(window_t))^2
//   + sum_j sum_lag lambda1[lag] * sum(phi_pos + phi_neg)[.,.,lag]
//   + (lambda2/2) * ||theta||^2
//   + (rho/2) h(S)^2 + alpha h(S)
//
// where S is the intra-slice squared-norm matrix. The design matrix is
// built once; per-child terms are independent and can fan out over a
// fixed number of threads with a deterministic in-order reduction.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const Eigen::MatrixXd& data, int max_lag, int kernels, int hidden_width,
                     std::vector<double> lambda1, double lambda2, int threads = 1)
      : d_(static_cast<int>(data.cols())),
        max_lag_(max_lag),
        m_(kernels),
        hidden_(hidden_width),
        lambda1_(std::move(lambda1)),
        lambda2_(lambda2),
        threads_(threads < 1 ? 1 : threads) {
    const Eigen::Index t_rows = data.rows();
    if (t_rows <= max_lag) throw std::runtime_error("objective: need T > K rows");
    if (static_cast<int>(lambda1_.size()) != max_lag + 1)
      throw std::runtime_error("objective: lambda1 needs K+1 entries");
    for (Eigen::Index r = 0; r < t_rows; ++r)
      for (Eigen::Index c = 0; c < data.cols(); ++c)
        if (!std::isfinite(data(r, c)))
          throw std::runtime_error("objective: non-finite data at row " + std::to_string(r) +
                                   ", column " + std::to_string(c));

    n_samples_ = t_rows - max_lag;
    const Eigen::Index cols = shape::kernel_cols(d_, max_lag_);
    design_.resize(cols, n_samples_);
    targets_.resize(d_, n_samples_);
    for (Eigen::Index s = 0; s < n_samples_; ++s) {
      const Eigen::Index t = s + max_lag;
      for (int lag = 0; lag <= max_lag_; ++lag)
        for (int i = 0; i < d_; ++i)
          design_(shape::kernel_col(d_, lag, i), s) = data(t - lag, i);
      targets_.col(s) = data.row(t).transpose();
    }
  }

  Eigen::Index parameter_count() const { return shape::total_params(d_, max_lag_, m_, hidden_); }

  std::pair<double, Eigen::VectorXd> evaluate(const Eigen::VectorXd& x, double rho,
                                              double alpha) const {
    const Eigen::Index per = shape::params_per_child(d_, max_lag_, m_, hidden_);
    if (x.size() != per * d_) throw std::runtime_error("objective: parameter vector length mismatch");

    // intra-slice squared-norm matrix from the kernel halves
    Eigen::MatrixXd s_mat = Eigen::MatrixXd::Zero(d_, d_);
    for (int j = 0; j < d_; ++j) {
      const auto phi_pos = phi_pos_view(x, j);
      const auto phi_neg = phi_neg_view(x, j);
      for (int i = 0; i < d_; ++i) {
        const Eigen::Index c = shape::kernel_col(d_, 0, i);
        s_mat(i, j) = (phi_pos.col(c) - phi_neg.col(c)).squaredNorm();
      }
    }
    const auto [h_val, h_grad] = acyclicity(s_mat);
    const double h_coeff = rho * h_val + alpha;

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
    std::vector<double> child_loss(static_cast<std::size_t>(d_), 0.0);

    auto run_child = [&](int j) {
      child_loss[static_cast<std::size_t>(j)] = child_term(x, j, h_coeff, h_grad, grad);
    };
    if (threads_ == 1 || d_ == 1) {
      for (int j = 0; j < d_; ++j) run_child(j);
    } else {
      std::vector<std::thread> pool;
      const int nt = std::min(threads_, d_);
      for (int w = 0; w < nt; ++w)
        pool.emplace_back([&, w] {
          for (int j = w; j < d_; j += nt) run_child(j);
        });
      for (auto& th : pool) th.join();
    }

    double value = 0.0;
    for (int j = 0; j < d_; ++j) value += child_loss[static_cast<std::size_t>(j)];
    value += 0.5 * lambda2_ * x.squaredNorm();
    grad += lambda2_ * x;
    value += 0.5 * rho * h_val * h_val + alpha * h_val;

    // hard-masked self-loop parameters report zero gradient
    for (int j = 0; j < d_; ++j) {
      const Eigen::Index c = shape::kernel_col(d_, 0, j);
      const Eigen::Index base = per * j;
      grad.segment(base + c * m_, m_).setZero();
      grad.segment(base + phi_size() + c * m_, m_).setZero();
    }
    return {value, std::move(grad)};
  }

  double current_h(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd s_mat = Eigen::MatrixXd::Zero(d_, d_);
    for (int j = 0; j < d_; ++j) {
      const auto phi_pos = phi_pos_view(x, j);
      const auto phi_neg = phi_neg_view(x, j);
      for (int i = 0; i < d_; ++i) {
        const Eigen::Index c = shape::kernel_col(d_, 0, i);
        s_mat(i, j) = (phi_pos.col(c) - phi_neg.col(c)).squaredNorm();
      }
    }
    return acyclicity(s_mat).first;
  }

  Eigen::Index samples() const { return n_samples_; }

 private:
  using ConstMatView = Eigen::Map<const Eigen::MatrixXd>;
  using ConstVecView = Eigen::Map<const Eigen::VectorXd>;

  Eigen::Index phi_size() const { return static_cast<Eigen::Index>(m_) * shape::kernel_cols(d_, max_lag_); }

  ConstMatView phi_pos_view(const Eigen::VectorXd& x, int j) const {
    const Eigen::Index per = shape::params_per_child(d_, max_lag_, m_, hidden_);
    return ConstMatView(x.data() + per * j, m_, shape::kernel_cols(d_, max_lag_));
  }
  ConstMatView phi_neg_view(const Eigen::VectorXd& x, int j) const {
    const Eigen::Index per = shape::params_per_child(d_, max_lag_, m_, hidden_);
    return ConstMatView(x.data() + per * j + phi_size(), m_, shape::kernel_cols(d_, max_lag_));
  }

  // Forward + backward for one child; writes its gradient segment and
  // returns its data-fit + L1 contribution to the objective value.
  double child_term(const Eigen::VectorXd& x, int j, double h_coeff,
                    const Eigen::MatrixXd& h_grad, Eigen::VectorXd& grad) const {
    const Eigen::Index per = shape::params_per_child(d_, max_lag_, m_, hidden_);
    const Eigen::Index cols = shape::kernel_cols(d_, max_lag_);
    const Eigen::Index base = per * j;
    Eigen::Index off = base;
    const ConstMatView phi_pos(x.data() + off, m_, cols);
    off += phi_size();
    const ConstMatView phi_neg(x.data() + off, m_, cols);
    off += phi_size();
    const ConstVecView conv_bias(x.data() + off, m_);
    off += m_;
    const ConstMatView a1(x.data() + off, hidden_, m_);
    off += static_cast<Eigen::Index>(hidden_) * m_;
    const ConstVecView hidden_bias(x.data() + off, hidden_);
    off += hidden_;
    const ConstVecView out_w(x.data() + off, hidden_);
    off += hidden_;
    const double out_b = x(off);

    const Eigen::MatrixXd phi_eff = phi_pos - phi_neg;
    const double inv_n = 1.0 / static_cast<double>(n_samples_);

    Eigen::MatrixXd z = phi_eff * design_;
    z.colwise() += conv_bias;
    const Eigen::MatrixXd act = z.unaryExpr([](double v) { return sigmoid(v); });
    Eigen::MatrixXd g = a1 * act;
    g.colwise() += hidden_bias;
    const Eigen::MatrixXd hid = g.unaryExpr([](double v) { return sigmoid(v); });
    Eigen::RowVectorXd yhat = out_w.transpose() * hid;
    yhat.array() += out_b;
    const Eigen::RowVectorXd resid = yhat - targets_.row(j);

    double value = resid.squaredNorm() * inv_n;

    // backward
    const Eigen::RowVectorXd dy = 2.0 * inv_n * resid;
    Eigen::VectorXd d_out_w = hid * dy.transpose();
    const double d_out_b = dy.sum();
    Eigen::MatrixXd dg = (out_w * dy).cwiseProduct(hid.cwiseProduct((1.0 - hid.array()).matrix()));
    Eigen::MatrixXd d_a1 = dg * act.transpose();
    Eigen::VectorXd d_hidden_bias = dg.rowwise().sum();
    Eigen::MatrixXd dz =
        (a1.transpose() * dg).cwiseProduct(act.cwiseProduct((1.0 - act.array()).matrix()));
    Eigen::MatrixXd d_phi_eff = dz * design_.transpose();
    Eigen::VectorXd d_conv_bias = dz.rowwise().sum();

    // L1 and acyclicity-chain terms
    Eigen::MatrixXd d_phi_pos = d_phi_eff;
    Eigen::MatrixXd d_phi_neg = -d_phi_eff;
    for (int lag = 0; lag <= max_lag_; ++lag) {
      const double l1 = lambda1_[static_cast<std::size_t>(lag)];
      for (int i = 0; i < d_; ++i) {
        const Eigen::Index c = shape::kernel_col(d_, lag, i);
        value += l1 * (phi_pos.col(c).sum() + phi_neg.col(c).sum());
        d_phi_pos.col(c).array() += l1;
        d_phi_neg.col(c).array() += l1;
      }
    }
    if (h_coeff != 0.0) {
      for (int i = 0; i < d_; ++i) {
        const Eigen::Index c = shape::kernel_col(d_, 0, i);
        const Eigen::VectorXd chain = 2.0 * h_coeff * h_grad(i, j) * phi_eff.col(c);
        d_phi_pos.col(c) += chain;
        d_phi_neg.col(c) -= chain;
      }
    }

    off = base;
    auto put_mat = [&](const Eigen::MatrixXd& mat) {
      grad.segment(off, mat.size()) = Eigen::Map<const Eigen::VectorXd>(mat.data(), mat.size());
      off += mat.size();
    };
    auto put_vec = [&](const Eigen::VectorXd& v) {
      grad.segment(off, v.size()) = v;
      off += v.size();
    };
    put_mat(d_phi_pos);
    put_mat(d_phi_neg);
    put_vec(d_conv_bias);
    put_mat(d_a1);
    put_vec(d_hidden_bias);
    put_vec(d_out_w);
    grad(off) = d_out_b;
    return value;
  }

  int d_;
  int max_lag_;
  int m_;
  int hidden_;
  std::vector<double> lambda1_;
  double lambda2_;
  int threads_;
  Eigen::Index n_samples_ = 0;
  Eigen::MatrixXd design_;   // (d*(K+1)) x N, column per usable time step
  Eigen::MatrixXd targets_;  // d x N
};

// Convenience wrapper matching the per-module contract: evaluates the
// objective on an already-standardized dataset for a given ModelSet.
inline std::pair<double, Eigen::VectorXd> objective_and_gradient(const ModelSet& models,
                                                                 const TimeSeriesDataset& data,
                                                                 const Hyperparams& hp, double rho,
                                                                 double alpha) {
  ObjectiveEvaluator eval(data.values, models.max_lag, models.kernels, models.hidden_width,
                          hp.lambda1_per_lag(), hp.lambda2);
  return eval.evaluate(pack(models), rho, alpha);
}

}  // namespace ntsn
