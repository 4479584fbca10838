// Command-line frontend: simulate data, learn graphs, evaluate against a
// ground truth, and run hyperparameter sweeps.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include <ntsn/constraints.hpp>
#include <ntsn/dataset.hpp>
#include <ntsn/graph.hpp>
#include <ntsn/learner.hpp>
#include <ntsn/metrics.hpp>
#include <ntsn/simulate.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int default_threads() {
  if (const char* env = std::getenv("NTSN_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

json weights_to_json(const ntsn::WeightTensor& w, const std::vector<std::string>& names) {
  json out;
  out["d"] = w.d;
  out["k"] = w.max_lag;
  out["variables"] = names;
  json lags = json::array();
  for (const auto& mat : w.w) {
    json rows = json::array();
    for (int i = 0; i < w.d; ++i) {
      json row = json::array();
      for (int j = 0; j < w.d; ++j) row.push_back(mat(i, j));
      rows.push_back(row);
    }
    lags.push_back(rows);
  }
  out["w"] = lags;
  return out;
}

ntsn::WeightTensor weights_from_json(const json& j) {
  ntsn::WeightTensor w(j.at("d").get<int>(), j.at("k").get<int>());
  const auto& lags = j.at("w");
  for (int k = 0; k <= w.max_lag; ++k)
    for (int i = 0; i < w.d; ++i)
      for (int jj = 0; jj < w.d; ++jj)
        w.w[static_cast<std::size_t>(k)](i, jj) =
            lags.at(k).at(i).at(jj).get<double>();
  return w;
}

std::vector<double> number_or_array(const json& v) {
  if (v.is_array()) return v.get<std::vector<double>>();
  return {v.get<double>()};
}

ntsn::Hyperparams hyperparams_from_json(const json& j, Eigen::Index t_rows) {
  ntsn::Hyperparams hp;
  hp.max_lag = j.value("k", 1);
  if (j.contains("lambda1"))
    hp.lambda1 = number_or_array(j.at("lambda1"));
  else
    hp.lambda1 = {t_rows <= 500 ? 0.01 : 0.001};  // simulated-data defaults
  hp.lambda2 = j.value("lambda2", 0.05);
  hp.kernels = j.value("m", 0);  // 0 -> d
  hp.hidden_width = j.value("hidden_width", 0);
  if (j.contains("thresholds"))
    hp.thresholds = number_or_array(j.at("thresholds"));
  else
    hp.thresholds = {0.3};
  hp.rho_init = j.value("rho_init", 1.0);
  hp.rho_max = j.value("rho_max", 1e16);
  hp.alpha_init = j.value("alpha_init", 0.0);
  hp.progress_ratio = j.value("progress_ratio", 0.25);
  hp.h_tolerance = j.value("h_tolerance", 1e-8);
  hp.max_outer_iterations = j.value("max_outer_iterations", 100);
  hp.seed = j.value("seed", 0);
  return hp;
}

json trace_to_json(const ntsn::FitTrace& trace) {
  json arr = json::array();
  for (const auto& rec : trace.outer)
    arr.push_back({{"rho", rec.rho},
                   {"alpha", rec.alpha},
                   {"h", rec.h_value},
                   {"objective", rec.objective_value},
                   {"inner_iterations", rec.inner_iterations}});
  return arr;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

// ---- simulate ----------------------------------------------------------

int cmd_simulate(const std::string& scheme, const std::string& scm, int d, int k,
                 double intra_deg, double inter_deg, int t_len, double forcing, double dt,
                 int sample_every, int burn_in, std::uint64_t seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  ntsn::TimeSeriesDataset data;
  ntsn::TemporalGraph truth;
  if (scm == "lorenz96") {
    auto [ds, g] = ntsn::lorenz96(d, forcing, t_len, dt, sample_every, seed);
    data = std::move(ds);
    truth = std::move(g);
  } else {
    ntsn::TemporalGraph graph =
        scheme == "ba"
            ? ntsn::gen_dag_ba(d, k, static_cast<int>(intra_deg), inter_deg, seed)
            : ntsn::gen_dag_er(d, k, intra_deg, inter_deg, seed);
    ntsn::ScmKind kind;
    if (scm == "anm")
      kind = ntsn::ScmKind::ANM;
    else if (scm == "aim")
      kind = ntsn::ScmKind::AIM;
    else if (scm == "glm-pois")
      kind = ntsn::ScmKind::GLMPois;
    else
      throw CLI::ValidationError("unknown SCM: " + scm);
    const auto model = ntsn::parameterize_scm(std::move(graph), kind, seed + 1);
    data = ntsn::sample_scm(model, t_len, burn_in, seed + 2);
    truth = model.graph;
  }
  ntsn::save_csv(data, (fs::path(out_dir) / "data.csv").string());
  ntsn::save_graph(truth, (fs::path(out_dir) / "truth.json").string());
  return 0;
}

// ---- learn -------------------------------------------------------------

int cmd_learn(const std::string& config_path, std::int64_t seed_override, int threads) {
  const json cfg = read_json_file(config_path);

  ntsn::TimeSeriesDataset data;
  try {
    data = ntsn::load_csv(cfg.at("data").get<std::string>());
    if (cfg.contains("categorical"))
      data = ntsn::one_hot_expand(data, cfg.at("categorical").get<std::vector<std::string>>());
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }

  ntsn::Hyperparams hp = hyperparams_from_json(cfg.value("hyperparameters", json::object()),
                                               data.rows());
  if (cfg.contains("seed")) hp.seed = cfg.at("seed").get<std::uint64_t>();
  if (seed_override >= 0) hp.seed = static_cast<std::uint64_t>(seed_override);

  std::vector<ntsn::PriorConstraint> prior;
  if (cfg.contains("prior_knowledge")) {
    try {
      prior = ntsn::load_constraints_file(cfg.at("prior_knowledge").get<std::string>(),
                                          data.names);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
  }

  const fs::path out_dir = cfg.value("output_dir", ".");
  fs::create_directories(out_dir);

  const auto result = ntsn::fit(data, hp, prior, threads);
  const auto graph = ntsn::threshold_fit(result, hp, data.names);

  write_text(out_dir / "weights.json", weights_to_json(result.weights, data.names).dump(2) + "\n");
  ntsn::save_graph(graph, (out_dir / "graph.json").string());
  write_text(out_dir / "graph.dot", ntsn::graph_to_dot(graph));
  write_text(out_dir / "trace.json", trace_to_json(result.trace).dump(2) + "\n");

  const auto report = ntsn::verify_constraints(graph, result.weights, prior);
  if (!report.all_satisfied()) {
    std::cerr << "warning: some prior constraints are not satisfied by the output graph\n";
  }
  return 0;
}

// ---- eval --------------------------------------------------------------

int cmd_eval(const std::string& est_path, const std::string& truth_path) {
  ntsn::TemporalGraph est, truth;
  try {
    est = ntsn::load_graph(est_path);
    truth = ntsn::load_graph(truth_path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  std::cout << ntsn::score_to_json(ntsn::score(est, truth)).dump(2) << '\n';
  return 0;
}

// ---- sweep -------------------------------------------------------------

int cmd_sweep(const std::string& config_path, int threads) {
  const json cfg = read_json_file(config_path);
  const fs::path out_dir = cfg.value("output_dir", ".");
  fs::create_directories(out_dir);

  struct Run {
    std::size_t dataset = 0;
    std::size_t config = 0;
    bool ok = false;
    std::string error;
    ntsn::GraphScore score;
    ntsn::WeightTensor weights;
  };

  std::vector<std::pair<std::string, std::string>> datasets;
  for (const auto& ds : cfg.at("datasets"))
    datasets.push_back({ds.at("data").get<std::string>(), ds.at("truth").get<std::string>()});
  const json base = cfg.value("base", json::object());
  std::vector<json> grid;
  for (const auto& point : cfg.at("grid")) {
    json merged = base;
    merged.update(point);
    grid.push_back(merged);
  }
  if (datasets.empty() || grid.empty()) throw DataError("sweep needs >= 1 dataset and config");

  std::vector<Run> runs(datasets.size() * grid.size());
  auto run_one = [&](std::size_t r) {
    Run& run = runs[r];
    run.dataset = r / grid.size();
    run.config = r % grid.size();
    try {
      const auto data = ntsn::load_csv(datasets[run.dataset].first);
      const auto truth = ntsn::load_graph(datasets[run.dataset].second);
      const auto hp = hyperparams_from_json(grid[run.config], data.rows());
      const auto fitted = ntsn::fit(data, hp, {}, 1);
      const auto graph = ntsn::threshold_fit(fitted, hp, data.names);
      run.score = ntsn::score(graph, truth);
      run.weights = fitted.weights;
      run.ok = true;
    } catch (const std::exception& e) {
      run.error = e.what();
    }
  };

  if (threads <= 1) {
    for (std::size_t r = 0; r < runs.size(); ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    const std::size_t nt = std::min<std::size_t>(threads, runs.size());
    for (std::size_t w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < runs.size(); r += nt) run_one(r);
      });
    for (auto& th : pool) th.join();
  }

  json runs_json = json::array();
  for (const auto& run : runs) {
    json rec = {{"dataset", run.dataset}, {"config", run.config}, {"ok", run.ok}};
    if (run.ok)
      rec["metrics"] = ntsn::score_to_json(run.score);
    else
      rec["error"] = run.error;
    runs_json.push_back(rec);
  }
  write_text(out_dir / "runs.json", runs_json.dump(2) + "\n");

  // per-config mean +- standard error of the F1 score
  json summary = json::array();
  bool any_ok = false;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    std::vector<double> f1s;
    for (const auto& run : runs)
      if (run.config == c && run.ok) f1s.push_back(run.score.f1);
    json rec = {{"config", grid[c]}, {"runs", f1s.size()}};
    if (!f1s.empty()) {
      any_ok = true;
      double mean = 0;
      for (double v : f1s) mean += v;
      mean /= static_cast<double>(f1s.size());
      double var = 0;
      for (double v : f1s) var += (v - mean) * (v - mean);
      const double se =
          f1s.size() > 1 ? std::sqrt(var / (static_cast<double>(f1s.size()) - 1.0) /
                                     static_cast<double>(f1s.size()))
                         : 0.0;
      rec["f1_mean"] = mean;
      rec["f1_se"] = se;
    }
    summary.push_back(rec);
  }

  // AUROC over configs, averaged across datasets
  std::vector<double> aurocs;
  for (std::size_t dsi = 0; dsi < datasets.size(); ++dsi) {
    std::vector<std::pair<std::vector<double>, ntsn::WeightTensor>> configs;
    for (const auto& run : runs) {
      if (run.dataset != dsi || !run.ok) continue;
      const auto hp = hyperparams_from_json(grid[run.config], 1000);
      configs.push_back({hp.thresholds_per_lag(), run.weights});
    }
    if (configs.size() >= 2) {
      const auto truth = ntsn::load_graph(datasets[dsi].second);
      aurocs.push_back(ntsn::auroc(configs, truth));
    }
  }
  json out = {{"configs", summary}};
  if (!aurocs.empty()) {
    double mean = 0;
    for (double v : aurocs) mean += v;
    out["auroc"] = mean / static_cast<double>(aurocs.size());
  }
  write_text(out_dir / "summary.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << '\n';
  return any_ok ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic Bayesian network structure learning from time series"};
  app.require_subcommand(1);
  app.fallthrough();  // allow global flags like --seed after the subcommand

  std::int64_t global_seed = -1;
  int threads = default_threads();
  app.add_option("--seed", global_seed, "Override the configured RNG seed");
  app.add_option("--threads", threads, "Worker threads (results are thread-count independent)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a dataset and its ground-truth graph");
  std::string scheme = "er", scm = "anm", out_dir = ".";
  int d = 10, k = 1, t_len = 1000, sample_every = 5, burn_in = 50;
  double intra_deg = 2.0, inter_deg = 1.0, forcing = 10.0, dt = 0.01;
  std::uint64_t sim_seed = 0;
  sim->add_option("--scheme", scheme, "er | ba")->check(CLI::IsMember({"er", "ba"}));
  sim->add_option("--scm", scm, "anm | aim | glm-pois | lorenz96")
      ->check(CLI::IsMember({"anm", "aim", "glm-pois", "lorenz96"}));
  sim->add_option("--d", d, "Variables per slice");
  sim->add_option("--k", k, "Maximum lag");
  sim->add_option("--intra-deg", intra_deg, "Intra-slice mean out-degree (ER) or attachment (BA)");
  sim->add_option("--inter-deg", inter_deg, "Inter-slice mean out-degree per lag");
  sim->add_option("--t", t_len, "Sequence length");
  sim->add_option("--f", forcing, "Lorenz 96 forcing");
  sim->add_option("--dt", dt, "Lorenz 96 integration step");
  sim->add_option("--sample-every", sample_every, "Lorenz 96 recording stride");
  sim->add_option("--burn-in", burn_in, "SCM burn-in slices");
  sim->add_option("--sim-seed", sim_seed, "Simulation seed (also set by global --seed)");
  sim->add_option("--out", out_dir, "Output directory");

  // learn
  auto* learn = app.add_subcommand("learn", "Fit a temporal graph from a config file");
  std::string learn_config;
  learn->add_option("--config", learn_config, "Run configuration JSON")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Score an estimated graph against a ground truth");
  std::string est_path, truth_path;
  eval->add_option("--est", est_path, "Estimated graph JSON")->required();
  eval->add_option("--truth", truth_path, "Ground-truth graph JSON")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Fit and score a grid of configurations");
  std::string sweep_config;
  sweep->add_option("--config", sweep_config, "Sweep configuration JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      const std::uint64_t seed = global_seed >= 0 ? static_cast<std::uint64_t>(global_seed)
                                                  : sim_seed;
      return cmd_simulate(scheme, scm, d, k, intra_deg, inter_deg, t_len, forcing, dt,
                          sample_every, burn_in, seed, out_dir);
    }
    if (learn->parsed()) return cmd_learn(learn_config, global_seed, threads);
    if (eval->parsed()) return cmd_eval(est_path, truth_path);
    if (sweep->parsed()) return cmd_sweep(sweep_config, threads);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
