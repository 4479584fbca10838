#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ntsn {

// Per-parameter box constraints; +-infinity marks a free side.
struct BoundBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static BoundBox unbounded(Eigen::Index n) {
    BoundBox b;
    b.lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    b.upper = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    return b;
  }

  void validate(Eigen::Index n) const {
    if (lower.size() != n || upper.size() != n)
      throw std::runtime_error("BoundBox: dimension mismatch");
    for (Eigen::Index i = 0; i < n; ++i)
      if (lower(i) > upper(i))
        throw std::runtime_error("BoundBox: lower > upper at index " + std::to_string(i));
  }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }

  bool contains(const Eigen::VectorXd& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }
};

struct OptimizerOptions {
  int memory_pairs = 10;
  int max_iterations = 500;
  double projected_gradient_tolerance = 1e-5;
  double function_decrease_tolerance = 1e-9;
};

enum class TerminationReason { converged_gradient, converged_function, max_iterations };

struct OptimizerResult {
  Eigen::VectorXd x_final;
  double f_final = 0.0;
  int iterations = 0;
  TerminationReason termination_reason = TerminationReason::max_iterations;
};

// value + gradient at a point
using Oracle = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

// Projected limited-memory quasi-Newton minimizer over a box. Directions
// come from the two-loop recursion restricted to the free variables;
// steps follow the projected path x(t) = P(x + t*dir) with backtracking
// sufficient-decrease line search. Curvature pairs with s.y <= 0 are
// skipped. Every accepted iterate is feasible and the objective is
// monotonically non-increasing.
inline OptimizerResult minimize(const Oracle& oracle, const Eigen::VectorXd& x0,
                                const BoundBox& bounds, const OptimizerOptions& opts = {}) {
  const Eigen::Index n = x0.size();
  bounds.validate(n);
  if (opts.memory_pairs < 1 || opts.max_iterations < 1 ||
      opts.projected_gradient_tolerance <= 0 || opts.function_decrease_tolerance <= 0)
    throw std::runtime_error("minimize: invalid optimizer options");

  Eigen::VectorXd x = bounds.project(x0);
  auto [f, g] = oracle(x);
  if (!std::isfinite(f) || !g.allFinite())
    throw std::runtime_error("minimize: oracle returned non-finite value at iterate 0");
  if (g.size() != n) throw std::runtime_error("minimize: gradient dimension mismatch");

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  double gamma = 1.0;

  OptimizerResult result;
  result.termination_reason = TerminationReason::max_iterations;

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    // projected gradient convergence test
    const Eigen::VectorXd pg = x - bounds.project(x - g);
    if (pg.lpNorm<Eigen::Infinity>() < opts.projected_gradient_tolerance) {
      result.termination_reason = TerminationReason::converged_gradient;
      break;
    }

    // active set: at a bound and the gradient pushes outward
    Eigen::VectorXd g_free = g;
    const double eps = 1e-12;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = x(i) <= bounds.lower(i) + eps && g(i) > 0;
      const bool at_upper = x(i) >= bounds.upper(i) - eps && g(i) < 0;
      if (at_lower || at_upper || bounds.lower(i) == bounds.upper(i)) g_free(i) = 0.0;
    }

    // two-loop recursion on the free gradient
    Eigen::VectorXd dir = -g_free;
    {
      const std::size_t h = s_hist.size();
      std::vector<double> alpha(h);
      for (std::size_t idx = h; idx-- > 0;) {
        alpha[idx] = rho_hist[idx] * s_hist[idx].dot(dir);
        dir -= alpha[idx] * y_hist[idx];
      }
      dir *= gamma;
      for (std::size_t idx = 0; idx < h; ++idx) {
        const double beta = rho_hist[idx] * y_hist[idx].dot(dir);
        dir += (alpha[idx] - beta) * s_hist[idx];
      }
    }
    for (Eigen::Index i = 0; i < n; ++i)
      if (g_free(i) == 0.0) dir(i) = 0.0;
    if (dir.dot(g) >= 0) dir = -g_free;  // not a descent direction; reset

    // backtracking along the projected path
    const double c1 = 1e-4;
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = f;
    Eigen::VectorXd g_new;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = bounds.project(x + t * dir);
      const Eigen::VectorXd step = x_new - x;
      if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
      auto [fv, gv] = oracle(x_new);
      // overshoot into overflow territory: shrink the step instead of failing
      if (!std::isfinite(fv) || !gv.allFinite()) {
        t *= 0.5;
        continue;
      }
      if (fv <= f + c1 * g.dot(step)) {
        f_new = fv;
        g_new = std::move(gv);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      result.termination_reason = TerminationReason::converged_function;
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      gamma = sy / y.squaredNorm();
      if (static_cast<int>(s_hist.size()) > opts.memory_pairs) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double decrease = f - f_new;
    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    if (decrease <= opts.function_decrease_tolerance * std::max(1.0, std::abs(f))) {
      ++iter;
      result.termination_reason = TerminationReason::converged_function;
      break;
    }
  }

  result.x_final = std::move(x);
  result.f_final = f;
  result.iterations = iter;
  return result;
}

}  // namespace ntsn
