#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ntsn/objective.hpp>
#include <ntsn/rng.hpp>

namespace {

Eigen::MatrixXd gaussian_data(int t, int d, std::uint64_t seed) {
  ntsn::Rng rng(seed);
  Eigen::MatrixXd data(t, d);
  for (int r = 0; r < t; ++r)
    for (int c = 0; c < d; ++c) data(r, c) = rng.normal();
  return data;
}

// self-loop kernel slots are hard-masked (gradient reported as zero), so
// finite differences skip them
std::vector<char> self_loop_mask(int d, int k, int m, int hidden) {
  std::vector<char> mask(static_cast<std::size_t>(ntsn::shape::total_params(d, k, m, hidden)), 0);
  const Eigen::Index per = ntsn::shape::params_per_child(d, k, m, hidden);
  const Eigen::Index phi_sz = m * ntsn::shape::kernel_cols(d, k);
  for (int j = 0; j < d; ++j) {
    const Eigen::Index c = ntsn::shape::kernel_col(d, 0, j);
    for (int b = 0; b < m; ++b) {
      mask[static_cast<std::size_t>(per * j + c * m + b)] = 1;
      mask[static_cast<std::size_t>(per * j + phi_sz + c * m + b)] = 1;
    }
  }
  return mask;
}

// central finite differences of the objective value
double max_relative_gradient_error(const ntsn::ObjectiveEvaluator& eval, const Eigen::VectorXd& x,
                                   double rho, double alpha, const std::vector<char>& skip) {
  const auto [value, grad] = eval.evaluate(x, rho, alpha);
  (void)value;
  const double step = 1e-5;
  double worst = 0.0;
  for (Eigen::Index p = 0; p < x.size(); ++p) {
    if (skip[static_cast<std::size_t>(p)]) continue;
    Eigen::VectorXd xp = x, xm = x;
    xp(p) += step;
    xm(p) -= step;
    const double fd = (eval.evaluate(xp, rho, alpha).first - eval.evaluate(xm, rho, alpha).first) /
                      (2 * step);
    if (fd == 0.0 && grad(p) == 0.0) continue;
    const double scale = std::max({std::abs(fd), std::abs(grad(p)), 1.0});
    worst = std::max(worst, std::abs(fd - grad(p)) / scale);
  }
  return worst;
}

Eigen::VectorXd random_params(int d, int k, int m, int hidden, std::uint64_t seed) {
  ntsn::ModelSet models = ntsn::init_params(d, k, m, hidden, seed);
  ntsn::Rng rng(seed * 31 + 1);
  for (int j = 0; j < d; ++j) {
    auto& c = models.children[static_cast<std::size_t>(j)];
    for (Eigen::Index cc = 0; cc < c.phi_pos.cols(); ++cc)
      for (int b = 0; b < m; ++b) {
        c.phi_pos(b, cc) = rng.uniform(0.0, 0.6);
        c.phi_neg(b, cc) = rng.uniform(0.0, 0.6);
      }
    c.phi_pos.col(ntsn::shape::kernel_col(d, 0, j)).setZero();
    c.phi_neg.col(ntsn::shape::kernel_col(d, 0, j)).setZero();
    for (int b = 0; b < m; ++b) c.conv_bias(b) = 0.3 * rng.normal();
    for (int r = 0; r < hidden; ++r) {
      c.hidden_bias(r) = 0.3 * rng.normal();
      c.output_weights(r) = rng.normal();
      for (int cc = 0; cc < m; ++cc) c.hidden_weights(r, cc) = rng.normal();
    }
    c.output_bias = rng.normal();
  }
  return ntsn::pack(models);
}

}  // namespace

TEST_CASE("zero parameters: value reduces to the data term") {
  const int d = 3, k = 1, t = 30;
  const Eigen::MatrixXd data = gaussian_data(t, d, 4);
  ntsn::ObjectiveEvaluator eval(data, k, 2, 2, {0.1, 0.1}, 0.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(eval.parameter_count());
  const auto [value, grad] = eval.evaluate(x, 5.0, 2.0);
  (void)grad;
  double expected = 0.0;
  for (int row = k; row < t; ++row) expected += data.row(row).squaredNorm();
  expected /= (t - k);
  CHECK(value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("increasing a phi_pos entry with positive lambda1 raises the value on zero data") {
  const int d = 3, k = 1, t = 20;
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(t, d);
  ntsn::ObjectiveEvaluator eval(data, k, 2, 2, {0.5, 0.5}, 0.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(eval.parameter_count());
  const double base = eval.evaluate(x, 0.0, 0.0).first;
  x(ntsn::shape::kernel_col(d, 1, 0) * 2) = 0.2;  // a lagged phi_pos entry of child 0
  CHECK(eval.evaluate(x, 0.0, 0.0).first > base);
}

TEST_CASE("analytic gradient matches finite differences on random instances") {
  ntsn::Rng pick(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 3 + static_cast<int>(pick.index(2));
    const int k = 1 + static_cast<int>(pick.index(2));
    const int m = 2;
    const int hidden = 2;
    const double rho = trial % 2 ? 5.0 : 0.0;
    const double alpha = trial % 3 ? 1.0 : 0.0;
    const Eigen::MatrixXd data = gaussian_data(40, d, 100 + static_cast<std::uint64_t>(trial));
    std::vector<double> lambda1(static_cast<std::size_t>(k + 1), 0.05);
    ntsn::ObjectiveEvaluator eval(data, k, m, hidden, lambda1, 0.02);
    const Eigen::VectorXd x = random_params(d, k, m, hidden, 500 + static_cast<std::uint64_t>(trial));
    CHECK(max_relative_gradient_error(eval, x, rho, alpha, self_loop_mask(d, k, m, hidden)) < 1e-4);
  }
}

TEST_CASE("non-finite data is rejected with the offending cell") {
  Eigen::MatrixXd data = gaussian_data(10, 3, 1);
  data(4, 2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(ntsn::ObjectiveEvaluator(data, 1, 2, 2, {0.1, 0.1}, 0.0),
                       doctest::Contains("row 4"), std::runtime_error);
}

TEST_CASE("T <= K is rejected") {
  Eigen::MatrixXd data = gaussian_data(2, 3, 1);
  CHECK_THROWS_AS(ntsn::ObjectiveEvaluator(data, 2, 2, 2, {0.1, 0.1, 0.1}, 0.0),
                  std::runtime_error);
}

TEST_CASE("threaded evaluation is bitwise identical to single-threaded") {
  const int d = 5, k = 2;
  const Eigen::MatrixXd data = gaussian_data(60, d, 9);
  std::vector<double> lambda1(static_cast<std::size_t>(k + 1), 0.01);
  ntsn::ObjectiveEvaluator serial(data, k, 3, 3, lambda1, 0.05, 1);
  ntsn::ObjectiveEvaluator parallel(data, k, 3, 3, lambda1, 0.05, 4);
  const Eigen::VectorXd x = random_params(d, k, 3, 3, 2);
  const auto [v1, g1] = serial.evaluate(x, 2.0, 0.5);
  const auto [v2, g2] = parallel.evaluate(x, 2.0, 0.5);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("self-loop gradient entries are reported as zero") {
  const int d = 3, k = 1, m = 2, hidden = 2;
  const Eigen::MatrixXd data = gaussian_data(30, d, 6);
  ntsn::ObjectiveEvaluator eval(data, k, m, hidden, {0.3, 0.3}, 0.1);
  const Eigen::VectorXd x = random_params(d, k, m, hidden, 3);
  const auto [value, grad] = eval.evaluate(x, 1.0, 1.0);
  (void)value;
  const Eigen::Index per = ntsn::shape::params_per_child(d, k, m, hidden);
  const Eigen::Index phi_sz = m * ntsn::shape::kernel_cols(d, k);
  for (int j = 0; j < d; ++j) {
    const Eigen::Index c = ntsn::shape::kernel_col(d, 0, j);
    CHECK(grad.segment(per * j + c * m, m).isZero(0.0));
    CHECK(grad.segment(per * j + phi_sz + c * m, m).isZero(0.0));
  }
}
