#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ntsn/dataset.hpp"
#include "ntsn/graph.hpp"
#include "ntsn/rng.hpp"

namespace ntsn {

enum class ScmKind { ANM, AIM, GLMPois };

// Ground-truth temporal DAG plus the SCM coefficients needed to sample
// from it. theta holds one coefficient per parent edge per index
// function (ANM and GLM-Pois use one, AIM uses three); all coefficients
// are drawn from +-[0.5, 2].
struct GroundTruthModel {
  TemporalGraph graph;
  ScmKind scm = ScmKind::ANM;
  // theta[f][(parent,lag,child)] for index function f
  std::vector<std::map<std::tuple<int, int, int>, double>> theta;
  std::vector<double> output_scale;  // ANM theta2, per child
  std::vector<double> glm_offset;    // GLM-Pois phi in [1,3], per child
};

namespace detail {

inline std::vector<std::string> default_names(int d) {
  std::vector<std::string> names;
  for (int i = 0; i < d; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

inline void add_inter_slice_edges(TemporalGraph& g, double inter_mean_outdeg, Rng& rng) {
  const double p = inter_mean_outdeg / static_cast<double>(g.d);
  if (p < 0 || p > 1) throw std::runtime_error("inter-slice mean out-degree infeasible");
  for (int k = 1; k <= g.max_lag; ++k)
    for (int i = 0; i < g.d; ++i)
      for (int j = 0; j < g.d; ++j)
        if (rng.uniform() < p) g.edges.push_back({i, k, j, 1.0});
}

inline std::vector<int> topological_order_intra(const TemporalGraph& g) {
  auto adj = g.intra_adjacency();
  std::vector<int> indeg(static_cast<std::size_t>(g.d), 0);
  for (const auto& nbrs : adj)
    for (int u : nbrs) ++indeg[static_cast<std::size_t>(u)];
  std::vector<int> order;
  std::vector<int> ready;
  for (int v = 0; v < g.d; ++v)
    if (indeg[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  while (!ready.empty()) {
    const int v = ready.front();
    ready.erase(ready.begin());
    order.push_back(v);
    for (int u : adj[static_cast<std::size_t>(v)])
      if (--indeg[static_cast<std::size_t>(u)] == 0) ready.push_back(u);
  }
  if (static_cast<int>(order.size()) != g.d)
    throw std::runtime_error("intra-slice graph has a cycle");
  return order;
}

}  // namespace detail

// Erdos-Renyi scheme: a random variable order makes the intra slice
// acyclic by construction; forward pairs appear with probability
// intra_mean_outdeg/(d-1), inter-slice pairs per lag with probability
// inter_mean_outdeg/d.
inline TemporalGraph gen_dag_er(int d, int max_lag, double intra_mean_outdeg,
                                double inter_mean_outdeg, std::uint64_t seed) {
  if (d < 2 || max_lag < 0) throw std::runtime_error("gen_dag_er: invalid dimensions");
  if (intra_mean_outdeg < 0 || intra_mean_outdeg > d - 1)
    throw std::runtime_error("gen_dag_er: intra mean out-degree infeasible");
  Rng rng(seed);
  TemporalGraph g;
  g.d = d;
  g.max_lag = max_lag;
  g.variable_names = detail::default_names(d);

  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  // a node averages (d-1)/2 forward candidates under a random order, so the
  // pair probability needs the factor 2 to hit the requested mean out-degree
  const double p = std::min(1.0, 2.0 * intra_mean_outdeg / static_cast<double>(d - 1));
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (rng.uniform() < p)
        g.edges.push_back({order[static_cast<std::size_t>(a)], 0,
                           order[static_cast<std::size_t>(b)], 1.0});
  detail::add_inter_slice_edges(g, inter_mean_outdeg, rng);
  return g;
}

// Barabasi-Albert scheme: intra slice grown by preferential attachment
// over a random variable order (new node attaches to existing nodes with
// probability proportional to degree+1, edges directed old -> new).
inline TemporalGraph gen_dag_ba(int d, int max_lag, int attachment_edges_intra,
                                double inter_mean_outdeg, std::uint64_t seed) {
  if (d < 2 || max_lag < 0 || attachment_edges_intra < 1)
    throw std::runtime_error("gen_dag_ba: invalid parameters");
  Rng rng(seed);
  TemporalGraph g;
  g.d = d;
  g.max_lag = max_lag;
  g.variable_names = detail::default_names(d);

  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);

  std::vector<int> degree(static_cast<std::size_t>(d), 0);
  for (int v = 1; v < d; ++v) {
    const int attach = std::min(attachment_edges_intra, v);
    std::vector<char> chosen(static_cast<std::size_t>(v), 0);
    for (int e = 0; e < attach; ++e) {
      double total = 0;
      for (int u = 0; u < v; ++u)
        if (!chosen[static_cast<std::size_t>(u)]) total += degree[static_cast<std::size_t>(u)] + 1;
      double pick = rng.uniform() * total;
      int target = -1;
      for (int u = 0; u < v; ++u) {
        if (chosen[static_cast<std::size_t>(u)]) continue;
        pick -= degree[static_cast<std::size_t>(u)] + 1;
        if (pick <= 0) {
          target = u;
          break;
        }
      }
      if (target < 0) target = v - 1;
      chosen[static_cast<std::size_t>(target)] = 1;
      g.edges.push_back({order[static_cast<std::size_t>(target)], 0,
                         order[static_cast<std::size_t>(v)], 1.0});
      ++degree[static_cast<std::size_t>(target)];
      ++degree[static_cast<std::size_t>(v)];
    }
  }
  detail::add_inter_slice_edges(g, inter_mean_outdeg, rng);
  return g;
}

// Draws SCM coefficients for every edge of the graph.
inline GroundTruthModel parameterize_scm(TemporalGraph graph, ScmKind scm, std::uint64_t seed) {
  Rng rng(seed);
  GroundTruthModel model;
  model.graph = std::move(graph);
  model.scm = scm;
  const int functions = scm == ScmKind::AIM ? 3 : 1;
  model.theta.resize(static_cast<std::size_t>(functions));
  for (int f = 0; f < functions; ++f)
    for (const auto& e : model.graph.edges)
      model.theta[static_cast<std::size_t>(f)][{e.parent, e.lag, e.child}] =
          rng.signed_uniform(0.5, 2.0);
  for (int j = 0; j < model.graph.d; ++j) {
    model.output_scale.push_back(rng.signed_uniform(0.5, 2.0));
    model.glm_offset.push_back(rng.uniform(1.0, 3.0));
  }
  return model;
}

// Samples a length-T series. The first K slices are i.i.d. standard
// Gaussians; each later slice is filled in topological order of the
// intra-slice DAG so instantaneous parents are available. burn_in extra
// slices are generated and discarded from the front.
inline TimeSeriesDataset sample_scm(const GroundTruthModel& model, int t_len, int burn_in,
                                    std::uint64_t seed) {
  if (t_len < 1 || burn_in < 0) throw std::runtime_error("sample_scm: invalid lengths");
  const int d = model.graph.d;
  const int k = model.graph.max_lag;
  Rng rng(seed);

  const auto order = detail::topological_order_intra(model.graph);

  // parents grouped per child
  std::vector<std::vector<Edge>> parents(static_cast<std::size_t>(d));
  for (const auto& e : model.graph.edges) parents[static_cast<std::size_t>(e.child)].push_back(e);

  const int total = k + burn_in + t_len;
  Eigen::MatrixXd data(total, d);
  for (int t = 0; t < k; ++t)
    for (int j = 0; j < d; ++j) data(t, j) = rng.normal();

  auto dot_parents = [&](int j, int t, int f) {
    double acc = 0.0;
    for (const auto& e : parents[static_cast<std::size_t>(j)]) {
      const double coeff = model.theta[static_cast<std::size_t>(f)].at({e.parent, e.lag, e.child});
      acc += coeff * data(t - e.lag, e.parent);
    }
    return acc;
  };

  for (int t = k; t < total; ++t) {
    for (int j : order) {
      double value = 0.0;
      switch (model.scm) {
        case ScmKind::ANM: {
          const double z = rng.normal();
          value = 1.0 / (1.0 + std::exp(-dot_parents(j, t, 0))) *
                      model.output_scale[static_cast<std::size_t>(j)] +
                  z;
          break;
        }
        case ScmKind::AIM: {
          const double z = rng.normal();
          value = z + std::tanh(dot_parents(j, t, 0)) + std::cos(dot_parents(j, t, 1)) +
                  std::sin(dot_parents(j, t, 2));
          break;
        }
        case ScmKind::GLMPois: {
          const double rate = std::tanh(dot_parents(j, t, 0)) +
                              model.glm_offset[static_cast<std::size_t>(j)];
          value = static_cast<double>(rng.poisson(std::max(rate, 0.0)));
          break;
        }
      }
      data(t, j) = value;
    }
  }

  TimeSeriesDataset out;
  out.names = model.graph.variable_names;
  out.values = data.bottomRows(t_len);
  return out;
}

// Integrates dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F with RK4
// from x_i = F plus a small seeded perturbation, cyclic indices. Records
// every sample_every-th step after a 1000-step burn-in. The ground truth
// has lag-1 edges into each i from {i-2, i-1, i, i+1} mod d.
inline std::pair<TimeSeriesDataset, TemporalGraph> lorenz96(int d, double forcing, int t_len,
                                                            double dt, int sample_every,
                                                            std::uint64_t seed) {
  if (d < 4) throw std::runtime_error("lorenz96: need d >= 4");
  if (dt <= 0 || t_len < 1 || sample_every < 1)
    throw std::runtime_error("lorenz96: invalid integration parameters");
  Rng rng(seed);

  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = forcing + rng.uniform(-0.01, 0.01);

  auto deriv = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd dx(d);
    for (int i = 0; i < d; ++i) {
      const int ip1 = (i + 1) % d;
      const int im1 = (i - 1 + d) % d;
      const int im2 = (i - 2 + d) % d;
      dx(i) = (s(ip1) - s(im2)) * s(im1) - s(i) + forcing;
    }
    return dx;
  };
  auto rk4_step = [&](Eigen::VectorXd& s) {
    const Eigen::VectorXd k1 = deriv(s);
    const Eigen::VectorXd k2 = deriv(s + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = deriv(s + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = deriv(s + dt * k3);
    s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  for (int step = 0; step < 1000; ++step) rk4_step(x);

  TimeSeriesDataset ds;
  ds.names = detail::default_names(d);
  ds.values.resize(t_len, d);
  for (int row = 0; row < t_len; ++row) {
    for (int step = 0; step < sample_every; ++step) rk4_step(x);
    ds.values.row(row) = x.transpose();
  }

  TemporalGraph truth;
  truth.d = d;
  truth.max_lag = 1;
  truth.variable_names = ds.names;
  for (int i = 0; i < d; ++i)
    for (int off : {-2, -1, 0, 1})
      truth.edges.push_back({(i + off + d) % d, 1, i, 1.0});
  return {std::move(ds), std::move(truth)};
}

}  // namespace ntsn
