#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace ntsn {

// Matrix exponential by scaling-and-squaring with a truncated Taylor core.
// Adequate for the small nonnegative matrices fed to the acyclicity
// function; the series is summed until terms fall below 1e-16 relative.
inline Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd b = a / std::ldexp(1.0, squarings);

  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * b) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-16 * result.cwiseAbs().maxCoeff()) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

// h(S) = tr(e^S) - d with gradient dh/dS = (e^S)^T. S must be the
// elementwise-squared intra-slice weight matrix (nonnegative, zero
// diagonal); h is zero exactly when the support of S is acyclic.
inline std::pair<double, Eigen::MatrixXd> acyclicity(const Eigen::MatrixXd& s) {
  if (!s.allFinite()) throw std::runtime_error("acyclicity: non-finite entries in input");
  if ((s.array() < 0).any()) throw std::runtime_error("acyclicity: negative entries in input");
  const Eigen::MatrixXd e = matrix_exponential(s);
  const double h = e.trace() - static_cast<double>(s.rows());
  return {h, e.transpose()};
}

}  // namespace ntsn
