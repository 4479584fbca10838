#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntsn/constraints.hpp"
#include "ntsn/dataset.hpp"
#include "ntsn/graph.hpp"
#include "ntsn/model.hpp"
#include "ntsn/objective.hpp"
#include "ntsn/optim.hpp"

namespace ntsn {

struct FitTrace {
  struct Record {
    double rho = 0.0;
    double alpha = 0.0;
    double h_value = 0.0;
    double objective_value = 0.0;
    int inner_iterations = 0;
  };
  std::vector<Record> outer;

  double final_h() const { return outer.empty() ? -1.0 : outer.back().h_value; }
};

struct FitResult {
  ModelSet models;
  WeightTensor weights;  // on the standardized scale
  FitTrace trace;
  ColumnStats scale;  // de-standardization transform, reported but not applied
};

inline WeightTensor make_weight_tensor(const ModelSet& models) {
  WeightTensor w(models.d, models.max_lag);
  w.w = extract_adjacency_matrices(models);
  return w;
}

// Augmented-Lagrangian outer loop: standardize, init, then repeat
// { minimize F + (rho/2)h^2 + alpha*h; bump rho tenfold when h has not
// dropped by progress_ratio; alpha += rho*h } until h <= h_tolerance,
// rho exceeds rho_max, or the outer budget runs out. Each outer solve
// warm-starts from the previous solution.
inline FitResult fit(const TimeSeriesDataset& data, const Hyperparams& hp,
                     const std::vector<PriorConstraint>& prior = {}, int threads = 1,
                     const OptimizerOptions& inner_opts = {}) {
  hp.validate();
  auto [std_data, scale] = standardize(data);

  const int d = static_cast<int>(std_data.cols());
  const int m = hp.kernels > 0 ? hp.kernels : d;
  const int hidden = hp.hidden_width > 0 ? hp.hidden_width : m;
  const int k = hp.max_lag;
  if (std_data.rows() <= k) throw std::runtime_error("fit: need T > K rows");

  ObjectiveEvaluator eval(std_data.values, k, m, hidden, hp.lambda1_per_lag(), hp.lambda2,
                          threads);
  const BoundBox bounds = build_bound_box(prior, d, k, m, hidden);
  Eigen::VectorXd x = bounds.project(pack(init_params(d, k, m, hidden, hp.seed)));

  // ridge continuation: near the random init the all-zero saddle is the
  // steepest descent target of the full objective, so settle into a
  // data-fitting basin at a reduced ridge and step the ridge up to its
  // target, letting each converged stage shrink the fit instead of
  // erasing it; stages are solved with a generous iteration budget so the
  // warm start handed to each next stage is a stationary point rather
  // than a half-descended, inflated-norm iterate
  if (hp.lambda2 > 0.0) {
    OptimizerOptions stage_opts = inner_opts;
    stage_opts.max_iterations = std::max(inner_opts.max_iterations, 4000);
    for (const double scale : {0.3, 0.5, 0.7, 0.85}) {
      ObjectiveEvaluator staged(std_data.values, k, m, hidden, hp.lambda1_per_lag(),
                                hp.lambda2 * scale, threads);
      const Oracle oracle = [&](const Eigen::VectorXd& p) {
        return staged.evaluate(p, hp.rho_init, hp.alpha_init);
      };
      x = minimize(oracle, x, bounds, stage_opts).x_final;
    }
  }

  FitResult result;
  double rho = hp.rho_init;
  double alpha = hp.alpha_init;
  double h_prev = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < hp.max_outer_iterations; ++outer) {
    const Oracle oracle = [&](const Eigen::VectorXd& p) { return eval.evaluate(p, rho, alpha); };
    OptimizerResult inner = minimize(oracle, x, bounds, inner_opts);
    x = inner.x_final;
    const double h_new = eval.current_h(x);
    if (!std::isfinite(inner.f_final) || !std::isfinite(h_new)) {
      throw std::runtime_error("fit: objective diverged at outer iteration " +
                               std::to_string(outer));
    }
    result.trace.outer.push_back({rho, alpha, h_new, inner.f_final, inner.iterations});

    if (h_new <= hp.h_tolerance) break;
    if (h_new > hp.progress_ratio * h_prev) {
      rho = std::min(rho * 10.0, hp.rho_max);
      if (rho >= hp.rho_max && h_new > hp.progress_ratio * h_prev) {
        // one last solve already done at rho_max; give up if no progress
        if (result.trace.outer.size() >= 2 &&
            result.trace.outer[result.trace.outer.size() - 2].rho >= hp.rho_max)
          break;
      }
    }
    alpha += rho * h_new;
    h_prev = h_new;
  }

  result.models = unpack(x, d, k, m, hidden);
  result.weights = make_weight_tensor(result.models);
  result.scale = scale;
  return result;
}

inline TemporalGraph threshold_fit(const FitResult& fit_result, const Hyperparams& hp,
                                   std::vector<std::string> names) {
  return threshold_graph(fit_result.weights, hp.thresholds_per_lag(), std::move(names));
}

}  // namespace ntsn
