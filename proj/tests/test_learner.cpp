#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ntsn/learner.hpp>
#include <ntsn/metrics.hpp>
#include <ntsn/simulate.hpp>

namespace {

ntsn::Hyperparams small_defaults(int k) {
  ntsn::Hyperparams hp;
  hp.max_lag = k;
  hp.lambda1 = {0.001};
  // weak-signal sigmoid SCM data supports only a light ridge before the
  // empty model becomes the optimum; 0.01 keeps true edges recoverable
  hp.lambda2 = 0.01;
  hp.thresholds = {0.3};
  return hp;
}

ntsn::TimeSeriesDataset chain_anm(int d, int t, std::uint64_t seed) {
  ntsn::TemporalGraph g;
  g.d = d;
  g.max_lag = 1;
  for (int i = 0; i < d; ++i) g.variable_names.push_back("x" + std::to_string(i));
  for (int i = 0; i + 1 < d; ++i) g.edges.push_back({i, 0, i + 1, 1.0});
  const auto model = ntsn::parameterize_scm(g, ntsn::ScmKind::ANM, seed);
  return ntsn::sample_scm(model, t, 50, seed + 1);
}

}  // namespace

TEST_CASE("standardize hand example with population std") {
  ntsn::TimeSeriesDataset ds;
  ds.names = {"a"};
  ds.values.resize(3, 1);
  ds.values << 1, 2, 3;
  const auto [out, stats] = ntsn::standardize(ds);
  const double r = std::sqrt(3.0 / 2.0);  // 1/sqrt(2/3)
  CHECK(out.values(0, 0) == doctest::Approx(-r).epsilon(1e-12));
  CHECK(out.values(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.values(2, 0) == doctest::Approx(r).epsilon(1e-12));
  CHECK(stats.mean[0] == doctest::Approx(2.0));
  CHECK(stats.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("standardize is idempotent and normalizes moments") {
  ntsn::Rng rng(4);
  ntsn::TimeSeriesDataset ds;
  ds.names = {"a", "b"};
  ds.values.resize(200, 2);
  for (int r = 0; r < 200; ++r) {
    ds.values(r, 0) = 3.0 + 2.0 * rng.normal();
    ds.values(r, 1) = -1.0 + 0.5 * rng.normal();
  }
  const auto [once, s1] = ntsn::standardize(ds);
  for (int c = 0; c < 2; ++c) {
    CHECK(std::abs(once.values.col(c).mean()) < 1e-9);
    const double var = once.values.col(c).array().square().mean();
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
  }
  const auto [twice, s2] = ntsn::standardize(once);
  CHECK((twice.values - once.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constant column is rejected by name") {
  ntsn::TimeSeriesDataset ds;
  ds.names = {"ok", "flat"};
  ds.values.resize(5, 2);
  ds.values << 1, 7, 2, 7, 3, 7, 4, 7, 5, 7;
  CHECK_THROWS_WITH_AS(ntsn::standardize(ds), doctest::Contains("flat"), std::runtime_error);
}

TEST_CASE("pure noise yields an empty graph") {
  ntsn::TemporalGraph g;
  g.d = 4;
  g.max_lag = 1;
  g.variable_names = {"a", "b", "c", "d"};
  const auto model = ntsn::parameterize_scm(g, ntsn::ScmKind::ANM, 11);
  const auto data = ntsn::sample_scm(model, 500, 50, 12);

  auto hp = small_defaults(1);
  hp.lambda2 = 0.05;  // a firm ridge must prune everything when there is no signal
  hp.seed = 1;
  const auto fit_result = ntsn::fit(data, hp);
  const auto graph = ntsn::threshold_fit(fit_result, hp, data.names);
  CHECK(graph.edges.empty());
  CHECK(fit_result.trace.final_h() <= hp.h_tolerance);
}

TEST_CASE("chain ANM data recovers the chain skeleton") {
  // orientation of individual links is not identifiable from a penalized
  // least-squares fit alone (either direction of a sigmoid link explains
  // the data), so assert the adjacency structure: both neighbouring pairs
  // are connected, the non-adjacent pair is not
  const auto data = chain_anm(3, 1000, 31);
  auto hp = small_defaults(1);
  hp.seed = 2;
  const auto fit_result = ntsn::fit(data, hp);
  const auto graph = ntsn::threshold_fit(fit_result, hp, data.names);
  CHECK((graph.has_edge(0, 0, 1) || graph.has_edge(1, 0, 0)));
  CHECK((graph.has_edge(1, 0, 2) || graph.has_edge(2, 0, 1)));
  CHECK_FALSE(graph.has_edge(0, 0, 2));
  CHECK_FALSE(graph.has_edge(2, 0, 0));
  CHECK(fit_result.trace.final_h() <= 1e-8);
  CHECK(ntsn::intra_slice_acyclic(graph));
}

TEST_CASE("fit is bitwise deterministic and thread-count independent") {
  const auto data = chain_anm(3, 300, 5);
  auto hp = small_defaults(1);
  hp.seed = 9;
  const auto a = ntsn::fit(data, hp, {}, 1);
  const auto b = ntsn::fit(data, hp, {}, 1);
  const auto c = ntsn::fit(data, hp, {}, 3);
  CHECK(ntsn::pack(a.models) == ntsn::pack(b.models));
  CHECK(ntsn::pack(a.models) == ntsn::pack(c.models));
}

TEST_CASE("forbidding a misoriented edge removes it and flips the link") {
  const auto data = chain_anm(3, 1000, 31);
  auto hp = small_defaults(1);
  hp.seed = 2;
  const auto free_fit = ntsn::fit(data, hp);
  const auto free_graph = ntsn::threshold_fit(free_fit, hp, data.names);
  // the unconstrained fit orients the second link backwards on this seed
  REQUIRE(free_graph.has_edge(2, 0, 1));

  ntsn::PriorConstraint forbid;
  forbid.parent = 2;
  forbid.lag = 0;
  forbid.child = 1;
  forbid.kind = ntsn::PriorConstraint::Kind::Forbidden;
  const auto constrained = ntsn::fit(data, hp, {forbid});
  CHECK(constrained.weights.w[0](2, 1) == 0.0);
  const auto graph = ntsn::threshold_fit(constrained, hp, data.names);
  CHECK_FALSE(graph.has_edge(2, 0, 1));
  // with the backwards direction excluded, the true orientation appears
  CHECK(graph.has_edge(1, 0, 2));
  CHECK(constrained.trace.final_h() <= hp.h_tolerance);
}

TEST_CASE("required edge weight clears its strength") {
  const auto data = chain_anm(3, 400, 13);
  auto hp = small_defaults(1);
  hp.seed = 4;
  ntsn::PriorConstraint req;
  req.parent = 2;
  req.lag = 1;
  req.child = 0;
  req.kind = ntsn::PriorConstraint::Kind::Required;
  req.strength = 0.4;
  const auto fit_result = ntsn::fit(data, hp, {req});
  CHECK(fit_result.weights.w[1](2, 0) >= 0.4 - 1e-12);
  const auto report =
      ntsn::verify_constraints(ntsn::threshold_fit(fit_result, hp, data.names),
                               fit_result.weights, {req});
  CHECK(report.all_satisfied());
}

TEST_CASE("trace ends at or below tolerance on convergence") {
  const auto data = chain_anm(3, 200, 55);
  auto hp = small_defaults(1);
  hp.seed = 5;
  const auto fit_result = ntsn::fit(data, hp);
  REQUIRE_FALSE(fit_result.trace.outer.empty());
  for (const auto& rec : fit_result.trace.outer) {
    CHECK(std::isfinite(rec.h_value));
    CHECK(rec.h_value >= 0.0);
  }
  CHECK(fit_result.trace.final_h() <= hp.h_tolerance);
}
