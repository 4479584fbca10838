#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntsn {

// Nonnegative dependency-strength tensor. Lag index k = 0 is the
// intra-slice (instantaneous) matrix, k = 1..K means k steps back.
// (Some references index the intra slice as K+1 instead; this library
// uses 0 throughout.)
struct WeightTensor {
  int d = 0;
  int max_lag = 0;
  std::vector<Eigen::MatrixXd> w;  // w[k](i, j): parent i -> child j at lag k

  WeightTensor() = default;
  WeightTensor(int d_, int max_lag_) : d(d_), max_lag(max_lag_) {
    w.assign(static_cast<std::size_t>(max_lag_ + 1), Eigen::MatrixXd::Zero(d_, d_));
  }
};

struct Edge {
  int parent = 0;
  int lag = 0;  // 0 = intra-slice
  int child = 0;
  double weight = 0.0;

  friend bool operator==(const Edge& a, const Edge& b) {
    return a.parent == b.parent && a.lag == b.lag && a.child == b.child;
  }
};

struct TemporalGraph {
  int d = 0;
  int max_lag = 0;
  std::vector<std::string> variable_names;
  std::vector<Edge> edges;

  bool has_edge(int parent, int lag, int child) const {
    for (const auto& e : edges)
      if (e.parent == parent && e.lag == lag && e.child == child) return true;
    return false;
  }

  std::size_t edge_count() const { return edges.size(); }

  std::vector<std::vector<int>> intra_adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(d));
    for (const auto& e : edges)
      if (e.lag == 0) adj[static_cast<std::size_t>(e.parent)].push_back(e.child);
    return adj;
  }
};

// DFS cycle check on an adjacency list.
inline bool has_cycle(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::pair<int, std::size_t>> stack;
  for (int start = 0; start < n; ++start) {
    if (state[static_cast<std::size_t>(start)] != 0) continue;
    stack.push_back({start, 0});
    state[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      auto& [v, idx] = stack.back();
      if (idx < adj[static_cast<std::size_t>(v)].size()) {
        const int u = adj[static_cast<std::size_t>(v)][idx++];
        if (state[static_cast<std::size_t>(u)] == 1) return true;
        if (state[static_cast<std::size_t>(u)] == 0) {
          state[static_cast<std::size_t>(u)] = 1;
          stack.push_back({u, 0});
        }
      } else {
        state[static_cast<std::size_t>(v)] = 2;
        stack.pop_back();
      }
    }
  }
  return false;
}

inline bool intra_slice_acyclic(const TemporalGraph& g) { return !has_cycle(g.intra_adjacency()); }

namespace detail {

// True if `to` is reachable from `from` over the given adjacency.
inline bool reachable(const std::vector<std::vector<int>>& adj, int from, int to) {
  std::vector<char> seen(adj.size(), 0);
  std::vector<int> stack{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (int u : adj[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        stack.push_back(u);
      }
    }
  }
  return false;
}

}  // namespace detail

// Keeps edges with w[k](i,j) >= thresholds[k]. If the surviving lag-0
// subgraph still has a cycle, repeatedly drops the smallest-weight lag-0
// edge that lies on some cycle (ties broken by (parent, child) order).
inline TemporalGraph threshold_graph(const WeightTensor& w, const std::vector<double>& thresholds,
                                     std::vector<std::string> names = {}) {
  if (static_cast<int>(thresholds.size()) != w.max_lag + 1)
    throw std::runtime_error("threshold_graph: need one threshold per lag");
  for (double t : thresholds)
    if (t < 0) throw std::runtime_error("threshold_graph: thresholds must be nonnegative");

  TemporalGraph g;
  g.d = w.d;
  g.max_lag = w.max_lag;
  if (names.empty())
    for (int i = 0; i < w.d; ++i) names.push_back("x" + std::to_string(i));
  g.variable_names = std::move(names);

  for (int k = 0; k <= w.max_lag; ++k)
    for (int i = 0; i < w.d; ++i)
      for (int j = 0; j < w.d; ++j) {
        if (k == 0 && i == j) continue;
        const double v = w.w[static_cast<std::size_t>(k)](i, j);
        if (v >= thresholds[static_cast<std::size_t>(k)] && v > 0)
          g.edges.push_back({i, k, j, v});
      }

  // cycle repair on the lag-0 subgraph
  while (true) {
    auto adj = g.intra_adjacency();
    if (!has_cycle(adj)) break;
    // an edge (i,j) is on a cycle iff i is reachable from j
    std::size_t victim = g.edges.size();
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const auto& ed = g.edges[e];
      if (ed.lag != 0) continue;
      if (!detail::reachable(adj, ed.child, ed.parent)) continue;
      if (victim == g.edges.size()) {
        victim = e;
        continue;
      }
      const auto& best = g.edges[victim];
      if (ed.weight < best.weight ||
          (ed.weight == best.weight &&
           std::pair{ed.parent, ed.child} < std::pair{best.parent, best.child}))
        victim = e;
    }
    g.edges.erase(g.edges.begin() + static_cast<std::ptrdiff_t>(victim));
  }
  return g;
}

inline nlohmann::json graph_to_json(const TemporalGraph& g) {
  nlohmann::json j;
  j["d"] = g.d;
  j["k"] = g.max_lag;
  j["variables"] = g.variable_names;
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    j["edges"].push_back({{"parent", g.variable_names[static_cast<std::size_t>(e.parent)]},
                          {"lag", e.lag},
                          {"child", g.variable_names[static_cast<std::size_t>(e.child)]},
                          {"weight", e.weight}});
  }
  return j;
}

inline TemporalGraph graph_from_json(const nlohmann::json& j) {
  TemporalGraph g;
  g.d = j.at("d").get<int>();
  g.max_lag = j.at("k").get<int>();
  g.variable_names = j.at("variables").get<std::vector<std::string>>();
  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < g.variable_names.size(); ++i)
      if (g.variable_names[i] == name) return static_cast<int>(i);
    throw std::runtime_error("graph JSON references unknown variable: " + name);
  };
  for (const auto& e : j.at("edges")) {
    g.edges.push_back({index_of(e.at("parent").get<std::string>()), e.at("lag").get<int>(),
                       index_of(e.at("child").get<std::string>()), e.at("weight").get<double>()});
  }
  return g;
}

inline void save_graph(const TemporalGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file: " + path);
  out << graph_to_json(g).dump(2) << '\n';
}

inline TemporalGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  nlohmann::json j;
  in >> j;
  return graph_from_json(j);
}

// Intra-slice edges solid black, lagged edges dashed blue.
inline std::string graph_to_dot(const TemporalGraph& g) {
  std::string dot = "digraph temporal {\n";
  for (const auto& name : g.variable_names) dot += "  \"" + name + "\";\n";
  for (const auto& e : g.edges) {
    dot += "  \"" + g.variable_names[static_cast<std::size_t>(e.parent)] + "\" -> \"" +
           g.variable_names[static_cast<std::size_t>(e.child)] + "\"";
    if (e.lag == 0)
      dot += " [color=black, label=\"" + std::to_string(e.weight) + "\"]";
    else
      dot += " [color=blue, style=dashed, label=\"lag " + std::to_string(e.lag) + ", " +
             std::to_string(e.weight) + "\"]";
    dot += ";\n";
  }
  dot += "}\n";
  return dot;
}

}  // namespace ntsn
