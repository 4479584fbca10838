#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ntsn/constraints.hpp>

using ntsn::PriorConstraint;

TEST_CASE("translate_bound direct evaluations") {
  CHECK(ntsn::translate_bound(0.3, 9) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(ntsn::translate_bound(0.5, 4) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ntsn::translate_bound(0.0, 5) == 0.0);
}

TEST_CASE("translate_bound is identity for m=1 and monotone in b") {
  for (double b : {0.0, 0.1, 0.7, 2.0}) CHECK(ntsn::translate_bound(b, 1) == b);
  double prev = -1.0;
  for (double b = 0.0; b <= 2.0; b += 0.05) {
    const double v = ntsn::translate_bound(b, 7);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("negative bound is rejected") {
  CHECK_THROWS_AS(ntsn::translate_bound(-0.1, 4), std::runtime_error);
}

TEST_CASE("empty constraint list leaves only nonnegativity and self-loop pins") {
  const int d = 3, k = 1, m = 2, hidden = 2;
  const auto box = ntsn::build_bound_box({}, d, k, m, hidden);
  const Eigen::Index per = ntsn::shape::params_per_child(d, k, m, hidden);
  const Eigen::Index phi_sz = m * ntsn::shape::kernel_cols(d, k);
  int pinned = 0, nonneg = 0, free_params = 0;
  for (Eigen::Index p = 0; p < box.lower.size(); ++p) {
    if (box.lower(p) == 0.0 && box.upper(p) == 0.0)
      ++pinned;
    else if (box.lower(p) == 0.0 && std::isinf(box.upper(p)))
      ++nonneg;
    else if (std::isinf(box.lower(p)) && std::isinf(box.upper(p)))
      ++free_params;
  }
  CHECK(pinned == d * 2 * m);                       // self-loop columns, both halves
  CHECK(nonneg == d * 2 * phi_sz - d * 2 * m);      // remaining kernel entries
  CHECK(free_params == d * (per - 2 * phi_sz));     // MLP parameters
}

TEST_CASE("forbidden edge pins 2m parameters to zero") {
  const int d = 4, k = 2, m = 3, hidden = 3;
  PriorConstraint c;
  c.parent = 0;
  c.lag = 1;
  c.child = 2;
  c.kind = PriorConstraint::Kind::Forbidden;
  const auto base = ntsn::build_bound_box({}, d, k, m, hidden);
  const auto box = ntsn::build_bound_box({c}, d, k, m, hidden);
  int newly_pinned = 0;
  for (Eigen::Index p = 0; p < box.lower.size(); ++p) {
    const bool pinned = box.lower(p) == 0.0 && box.upper(p) == 0.0;
    const bool was = base.lower(p) == 0.0 && base.upper(p) == 0.0;
    if (pinned && !was) ++newly_pinned;
  }
  CHECK(newly_pinned == 2 * m);
}

TEST_CASE("required edge lower-bounds phi_pos so the norm clears the strength") {
  const int d = 5, k = 1, m = 4, hidden = 4;
  PriorConstraint c;
  c.parent = 1;
  c.lag = 0;
  c.child = 3;
  c.kind = PriorConstraint::Kind::Required;
  c.strength = 0.5;
  const auto box = ntsn::build_bound_box({c}, d, k, m, hidden);
  const Eigen::Index per = ntsn::shape::params_per_child(d, k, m, hidden);
  const Eigen::Index pos = per * 3 + ntsn::shape::kernel_col(d, 0, 1) * m;
  double norm_sq = 0.0;
  for (int b = 0; b < m; ++b) {
    CHECK(box.lower(pos + b) == doctest::Approx(0.25).epsilon(1e-12));
    norm_sq += box.lower(pos + b) * box.lower(pos + b);
  }
  CHECK(std::sqrt(norm_sq) == doctest::Approx(0.5).epsilon(1e-12));
  // phi_neg pinned
  const Eigen::Index phi_sz = m * ntsn::shape::kernel_cols(d, k);
  const Eigen::Index neg = per * 3 + phi_sz + ntsn::shape::kernel_col(d, 0, 1) * m;
  for (int b = 0; b < m; ++b) {
    CHECK(box.lower(neg + b) == 0.0);
    CHECK(box.upper(neg + b) == 0.0);
  }
}

TEST_CASE("conflicting and invalid constraints are rejected") {
  const int d = 3, k = 1, m = 2, hidden = 2;
  PriorConstraint a;
  a.parent = 0;
  a.lag = 0;
  a.child = 1;
  a.kind = PriorConstraint::Kind::Forbidden;
  PriorConstraint b = a;
  b.kind = PriorConstraint::Kind::Required;
  b.strength = 0.5;
  CHECK_THROWS_AS(ntsn::build_bound_box({a, b}, d, k, m, hidden), std::runtime_error);

  PriorConstraint self;
  self.parent = 2;
  self.lag = 0;
  self.child = 2;
  self.kind = PriorConstraint::Kind::Required;
  self.strength = 0.5;
  CHECK_THROWS_AS(ntsn::build_bound_box({self}, d, k, m, hidden), std::runtime_error);

  PriorConstraint oob = a;
  oob.lag = 5;
  CHECK_THROWS_AS(ntsn::build_bound_box({oob}, d, k, m, hidden), std::runtime_error);
}

TEST_CASE("verify_constraints reports satisfaction") {
  ntsn::WeightTensor w(3, 1);
  ntsn::TemporalGraph g;
  g.d = 3;
  g.max_lag = 1;
  g.variable_names = {"a", "b", "c"};

  PriorConstraint forbid;
  forbid.parent = 0;
  forbid.lag = 1;
  forbid.child = 1;
  forbid.kind = PriorConstraint::Kind::Forbidden;
  CHECK(ntsn::verify_constraints(g, w, {forbid}).all_satisfied());

  PriorConstraint req;
  req.parent = 0;
  req.lag = 0;
  req.child = 2;
  req.kind = PriorConstraint::Kind::Required;
  req.strength = 0.5;
  w.w[0](0, 2) = 0.6;
  g.edges.push_back({0, 0, 2, 0.6});
  CHECK(ntsn::verify_constraints(g, w, {req}).all_satisfied());

  ntsn::TemporalGraph missing = g;
  missing.edges.clear();
  ntsn::WeightTensor weak = w;
  weak.w[0](0, 2) = 0.4;
  CHECK_FALSE(ntsn::verify_constraints(missing, weak, {req}).all_satisfied());
}

TEST_CASE("constraint JSON resolves names and indices") {
  const auto arr = nlohmann::json::parse(R"([
    {"parent": "a", "lag": 0, "child": "c", "kind": "forbidden"},
    {"parent": 1, "lag": 1, "child": 2, "kind": "required", "strength": 0.7},
    {"parent": "b", "lag": 1, "child": "a", "kind": "range", "lower": 0.1, "upper": 0.4}
  ])");
  const auto cs = ntsn::load_constraints(arr, {"a", "b", "c"});
  REQUIRE(cs.size() == 3);
  CHECK(cs[0].parent == 0);
  CHECK(cs[0].child == 2);
  CHECK(cs[0].kind == PriorConstraint::Kind::Forbidden);
  CHECK(cs[1].strength == 0.7);
  CHECK(cs[2].lower == 0.1);
  CHECK(cs[2].upper == 0.4);
  CHECK_THROWS_AS(ntsn::load_constraints(arr, {"x", "y", "z"}), std::runtime_error);
}
