#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntsn/graph.hpp"
#include "ntsn/model.hpp"
#include "ntsn/optim.hpp"

namespace ntsn {

// User prior knowledge about a single edge (parent i, lag k, child j).
struct PriorConstraint {
  enum class Kind { Forbidden, Required, Range };

  int parent = 0;
  int lag = 0;  // 0 = intra-slice
  int child = 0;
  Kind kind = Kind::Forbidden;
  double strength = 0.0;  // Required: minimum edge weight
  double lower = 0.0;     // Range
  double upper = 0.0;     // Range
};

// Scales a user-facing edge-weight bound b into the per-parameter bound
// applied to each of the m kernel entries: b / sqrt(m).
inline double translate_bound(double b, int m) {
  if (b < 0) throw std::runtime_error("translate_bound: bounds must be nonnegative");
  if (m < 1) throw std::runtime_error("translate_bound: kernel count must be positive");
  return std::sqrt(b * b / static_cast<double>(m));
}

// Builds the optimizer box for the flat parameter vector.
// Base box: both kernel halves in [0, inf), self-loop intra columns pinned
// to [0,0], MLP parameters free. Constraint overlays act on the child's
// kernel columns: Forbidden pins both halves to zero; Required puts a
// lower bound of translate_bound(l, m) on each phi_pos entry and pins
// phi_neg (so the resulting edge norm is at least l); Range bounds
// phi_pos entries to [translate_bound(lo,m), translate_bound(hi,m)].
inline BoundBox build_bound_box(const std::vector<PriorConstraint>& constraints, int d,
                                int max_lag, int m, int hidden) {
  const double inf = std::numeric_limits<double>::infinity();
  const Eigen::Index per = shape::params_per_child(d, max_lag, m, hidden);
  const Eigen::Index phi_sz = static_cast<Eigen::Index>(m) * shape::kernel_cols(d, max_lag);
  BoundBox box = BoundBox::unbounded(per * d);

  auto pos_seg = [&](int j, int lag, int i) { return per * j + shape::kernel_col(d, lag, i) * m; };
  auto neg_seg = [&](int j, int lag, int i) {
    return per * j + phi_sz + shape::kernel_col(d, lag, i) * m;
  };

  for (int j = 0; j < d; ++j) {
    box.lower.segment(per * j, 2 * phi_sz).setZero();  // sign-split nonnegativity
    box.lower.segment(pos_seg(j, 0, j), m).setZero();
    box.upper.segment(pos_seg(j, 0, j), m).setZero();  // self-loop mask
    box.lower.segment(neg_seg(j, 0, j), m).setZero();
    box.upper.segment(neg_seg(j, 0, j), m).setZero();
  }

  std::vector<std::array<int, 3>> seen;
  for (const auto& c : constraints) {
    if (c.parent < 0 || c.parent >= d || c.child < 0 || c.child >= d || c.lag < 0 ||
        c.lag > max_lag)
      throw std::runtime_error("prior constraint indices out of range");
    if (c.lag == 0 && c.parent == c.child)
      throw std::runtime_error("prior constraint on an intra-slice self-loop");
    for (const auto& s : seen)
      if (s[0] == c.parent && s[1] == c.lag && s[2] == c.child)
        throw std::runtime_error("conflicting prior constraints on one edge");
    seen.push_back({c.parent, c.lag, c.child});

    const Eigen::Index pos = pos_seg(c.child, c.lag, c.parent);
    const Eigen::Index neg = neg_seg(c.child, c.lag, c.parent);
    switch (c.kind) {
      case PriorConstraint::Kind::Forbidden:
        box.lower.segment(pos, m).setZero();
        box.upper.segment(pos, m).setZero();
        box.lower.segment(neg, m).setZero();
        box.upper.segment(neg, m).setZero();
        break;
      case PriorConstraint::Kind::Required: {
        if (c.strength <= 0) throw std::runtime_error("required edge needs a positive strength");
        const double lb = translate_bound(c.strength, m);
        box.lower.segment(pos, m).setConstant(lb);
        box.upper.segment(pos, m).setConstant(inf);
        box.lower.segment(neg, m).setZero();
        box.upper.segment(neg, m).setZero();
        break;
      }
      case PriorConstraint::Kind::Range: {
        if (c.lower < 0 || c.upper < c.lower)
          throw std::runtime_error("range constraint needs 0 <= lower <= upper");
        box.lower.segment(pos, m).setConstant(translate_bound(c.lower, m));
        box.upper.segment(pos, m).setConstant(translate_bound(c.upper, m));
        box.lower.segment(neg, m).setZero();
        box.upper.segment(neg, m).setZero();
        break;
      }
    }
  }
  return box;
}

struct ConstraintReport {
  struct Entry {
    PriorConstraint constraint;
    bool satisfied = false;
    double observed_weight = 0.0;
  };
  std::vector<Entry> entries;

  bool all_satisfied() const {
    for (const auto& e : entries)
      if (!e.satisfied) return false;
    return true;
  }
};

inline ConstraintReport verify_constraints(const TemporalGraph& graph, const WeightTensor& w,
                                           const std::vector<PriorConstraint>& constraints) {
  ConstraintReport report;
  for (const auto& c : constraints) {
    ConstraintReport::Entry e;
    e.constraint = c;
    e.observed_weight = w.w[static_cast<std::size_t>(c.lag)](c.parent, c.child);
    switch (c.kind) {
      case PriorConstraint::Kind::Forbidden:
        e.satisfied = e.observed_weight <= 1e-12;
        break;
      case PriorConstraint::Kind::Required:
        e.satisfied = graph.has_edge(c.parent, c.lag, c.child);
        break;
      case PriorConstraint::Kind::Range:
        e.satisfied = e.observed_weight >= c.lower && e.observed_weight <= c.upper + 1e-9;
        break;
    }
    report.entries.push_back(e);
  }
  return report;
}

// Prior-knowledge file: JSON array of
//   {"parent": name-or-index, "lag": int, "child": name-or-index,
//    "kind": "forbidden"|"required"|"range",
//    "strength"/"lower"/"upper": numbers}
inline std::vector<PriorConstraint> load_constraints(const nlohmann::json& arr,
                                                     const std::vector<std::string>& names) {
  auto resolve = [&](const nlohmann::json& v) -> int {
    if (v.is_number_integer()) return v.get<int>();
    const std::string name = v.get<std::string>();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw std::runtime_error("prior knowledge references unknown variable: " + name);
  };
  std::vector<PriorConstraint> out;
  for (const auto& item : arr) {
    PriorConstraint c;
    c.parent = resolve(item.at("parent"));
    c.lag = item.at("lag").get<int>();
    c.child = resolve(item.at("child"));
    const std::string kind = item.at("kind").get<std::string>();
    if (kind == "forbidden") {
      c.kind = PriorConstraint::Kind::Forbidden;
    } else if (kind == "required") {
      c.kind = PriorConstraint::Kind::Required;
      c.strength = item.at("strength").get<double>();
    } else if (kind == "range") {
      c.kind = PriorConstraint::Kind::Range;
      c.lower = item.at("lower").get<double>();
      c.upper = item.at("upper").get<double>();
    } else {
      throw std::runtime_error("unknown constraint kind: " + kind);
    }
    out.push_back(c);
  }
  return out;
}

inline std::vector<PriorConstraint> load_constraints_file(const std::string& path,
                                                          const std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prior-knowledge file: " + path);
  nlohmann::json j;
  in >> j;
  return load_constraints(j, names);
}

}  // namespace ntsn
