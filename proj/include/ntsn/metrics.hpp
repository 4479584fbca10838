#pragma once

#include <algorithm>
#include <json.hpp>
#include <stdexcept>
#include <vector>

#include "ntsn/graph.hpp"

namespace ntsn {

struct GraphScore {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  int reversed_intra = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int shd = 0;
};

// Edges match as exact (parent, lag, child) triples. An intra-slice pair
// where the estimate has only j->i while the truth has only i->j counts
// as one reversal: it contributes 1 to SHD and is excluded from both FP
// and FN. Lagged edges are always time-directed, so their mismatches are
// plain FP/FN.
inline GraphScore score(const TemporalGraph& est, const TemporalGraph& truth) {
  if (est.d != truth.d || est.max_lag != truth.max_lag)
    throw std::runtime_error("score: graphs have different shapes");

  GraphScore s;
  std::vector<Edge> fp_candidates;
  for (const auto& e : est.edges) {
    if (truth.has_edge(e.parent, e.lag, e.child))
      ++s.true_positives;
    else
      fp_candidates.push_back(e);
  }
  std::vector<Edge> fn_candidates;
  for (const auto& e : truth.edges)
    if (!est.has_edge(e.parent, e.lag, e.child)) fn_candidates.push_back(e);

  // reversal: est has j->i (spurious), truth has i->j (missed), intra only
  std::vector<char> fp_used(fp_candidates.size(), 0);
  for (const auto& missed : fn_candidates) {
    if (missed.lag != 0) {
      ++s.false_negatives;
      continue;
    }
    bool reversed = false;
    for (std::size_t q = 0; q < fp_candidates.size(); ++q) {
      const auto& spurious = fp_candidates[q];
      if (!fp_used[q] && spurious.lag == 0 && spurious.parent == missed.child &&
          spurious.child == missed.parent) {
        fp_used[q] = 1;
        reversed = true;
        break;
      }
    }
    if (reversed)
      ++s.reversed_intra;
    else
      ++s.false_negatives;
  }
  for (std::size_t q = 0; q < fp_candidates.size(); ++q)
    if (!fp_used[q]) ++s.false_positives;

  s.shd = s.false_positives + s.false_negatives + s.reversed_intra;
  const double tp = s.true_positives;
  const double denom_p = tp + s.false_positives + s.reversed_intra;
  const double denom_r = tp + s.false_negatives + s.reversed_intra;
  s.precision = denom_p > 0 ? tp / denom_p : 0.0;
  s.recall = denom_r > 0 ? tp / denom_r : 0.0;
  s.f1 = (s.precision + s.recall) > 0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

inline nlohmann::json score_to_json(const GraphScore& s) {
  return {{"f1", s.f1},          {"precision", s.precision}, {"recall", s.recall},
          {"shd", s.shd},        {"tp", s.true_positives},   {"fp", s.false_positives},
          {"fn", s.false_negatives}, {"reversed", s.reversed_intra}};
}

// Area under the ROC curve from a discrete set of configurations. Each
// configuration binarizes its weight tensor at its thresholds; the
// resulting (FPR, TPR) points plus the (0,0)/(1,1) anchors are sorted by
// FPR (ties by TPR) and integrated with the trapezoid rule. The edge
// universe is all (K+1)*d*d - d slots (lag-0 diagonal excluded).
inline double auroc(const std::vector<std::pair<std::vector<double>, WeightTensor>>& configs,
                    const TemporalGraph& truth) {
  if (configs.size() < 2) throw std::runtime_error("auroc: need at least 2 configurations");
  if (truth.edges.empty()) throw std::runtime_error("auroc: empty truth graph (TPR undefined)");

  const double positives = static_cast<double>(truth.edges.size());
  std::vector<std::pair<double, double>> points{{0.0, 0.0}, {1.0, 1.0}};
  for (const auto& [thresholds, w] : configs) {
    if (w.d != truth.d || w.max_lag != truth.max_lag)
      throw std::runtime_error("auroc: weight tensor shape mismatch");
    if (static_cast<int>(thresholds.size()) != w.max_lag + 1)
      throw std::runtime_error("auroc: need one threshold per lag");
    double tp = 0, fp = 0;
    double negatives = 0;
    for (int k = 0; k <= w.max_lag; ++k)
      for (int i = 0; i < w.d; ++i)
        for (int j = 0; j < w.d; ++j) {
          if (k == 0 && i == j) continue;
          const bool is_true = truth.has_edge(i, k, j);
          if (!is_true) ++negatives;
          const bool predicted =
              w.w[static_cast<std::size_t>(k)](i, j) >= thresholds[static_cast<std::size_t>(k)];
          if (predicted && is_true) ++tp;
          if (predicted && !is_true) ++fp;
        }
    points.push_back({negatives > 0 ? fp / negatives : 0.0, tp / positives});
  }
  std::sort(points.begin(), points.end());
  double area = 0.0;
  for (std::size_t p = 1; p < points.size(); ++p)
    area += 0.5 * (points[p].first - points[p - 1].first) *
            (points[p].second + points[p - 1].second);
  return area;
}

}  // namespace ntsn
