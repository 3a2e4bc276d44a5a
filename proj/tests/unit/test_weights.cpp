#include "doctest.h"

#include "netspill/errors.hpp"
#include "netspill/models.hpp"
#include "netspill/weights.hpp"

#include <cmath>

using namespace netspill;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Star around node 0 with `leaves` neighbours.
Network star(int leaves) {
  std::vector<Edge> edges;
  for (NodeId j = 1; j <= leaves; ++j) edges.push_back({0, j});
  return build_network(static_cast<std::size_t>(leaves + 1), edges);
}

DesignMatrix binary_design(const std::vector<double>& z) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(z.size()), 1);
  for (std::size_t i = 0; i < z.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = z[i];
  return DesignMatrix::with_intercept(m, {"Z"});
}

MixedLogisticFit propensity_fit(double b0, double b1, double sd) {
  MixedLogisticFit fit;
  fit.fixed_coefficients = Eigen::Vector2d(b0, b1);
  fit.re_sd = sd;
  return fit;
}

}  // namespace

TEST_CASE("allocation probabilities") {
  CHECK(pi_neighbors(2, 4, Allocation{0.5}) == doctest::Approx(0.0625));
  CHECK(pi_neighbors(0, 0, Allocation{0.3}) == 1.0);
  CHECK(pi_neighbors(1, 3, Allocation{0.25}) == doctest::Approx(0.140625));
  CHECK(pi_joint(1, 2, 4, Allocation{0.5}) == doctest::Approx(0.03125));
  CHECK(pi_joint(0, 0, 0, Allocation{0.3}) == doctest::Approx(0.7));
  CHECK_THROWS_AS(pi_neighbors(5, 4, Allocation{0.5}), InputError);
  CHECK_THROWS_AS(pi_neighbors(-1, 4, Allocation{0.5}), InputError);
  CHECK_THROWS_AS(Allocation{0.0}, InputError);
  CHECK_THROWS_AS(Allocation{1.0}, InputError);
}

TEST_CASE("joint allocation probabilities sum to one over every pattern") {
  const Allocation alpha{0.4};
  const int d = 3;
  double total = 0.0;
  for (int a = 0; a <= 1; ++a) {
    for (unsigned mask = 0; mask < (1u << d); ++mask) total += pi_joint(a, __builtin_popcount(mask), d, alpha);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("propensity density without a random intercept") {
  SUBCASE("isolate with zero predictor") {
    const Network net = build_network(1, {});
    const std::vector<int> a{1};
    CHECK(propensity_density(net, 0, a, binary_design({0}), propensity_fit(0, 0, 0)) == doctest::Approx(0.5));
  }
  SUBCASE("two neighbours, all predictors zero") {
    const Network net = star(2);
    for (unsigned mask = 0; mask < 8; ++mask) {
      const std::vector<int> a{int(mask & 1u), int((mask >> 1) & 1u), int((mask >> 2) & 1u)};
      CHECK(propensity_density(net, 0, a, binary_design({0, 1, 0}), propensity_fit(0, 0, 0)) ==
            doctest::Approx(0.125));
    }
  }
}

TEST_CASE("propensity density matches a Monte-Carlo integral") {
  const Network net = star(4);
  const std::vector<double> z{1, 0, 1, 1, 0};
  const std::vector<int> a{0, 1, 0, 1, 1};
  const double sd = 0.5;
  const double f = propensity_density(net, 0, a, binary_design(z), propensity_fit(0.7, -1.4, sd));

  Rng rng = make_stream(123, 0);
  const int draws = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < draws; ++r) {
    const double b = sd * draw_std_normal(rng);
    double prod = 1.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double p = sigmoid(0.7 - 1.4 * z[j] + b);
      prod *= a[j] ? p : 1 - p;
    }
    sum += prod;
    sum_sq += prod * prod;
  }
  const double mean = sum / draws;
  const double mc_se = std::sqrt((sum_sq / draws - mean * mean) / draws);
  CHECK(std::abs(f - mean) < 3 * mc_se);
}

TEST_CASE("propensity density sums to one over exposure patterns") {
  for (int leaves : {1, 3, 6, 9}) {
    const Network net = star(leaves);
    std::vector<double> z(static_cast<std::size_t>(leaves + 1));
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = static_cast<double>(j % 2);
    const DesignMatrix x = binary_design(z);
    const auto fit = propensity_fit(0.7, -1.4, 0.5);
    double total = 0.0;
    std::vector<int> a(z.size());
    for (unsigned mask = 0; mask < (1u << z.size()); ++mask) {
      for (std::size_t j = 0; j < z.size(); ++j) a[j] = (mask >> j) & 1u;
      total += propensity_density(net, 0, a, x, fit);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("propensity density ignores neighbour order and barely depends on the rule size") {
  // The same neighbourhood listed in two different node orders.
  const std::vector<Edge> e1{{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  const std::vector<Edge> e2{{0, 4}, {0, 3}, {0, 2}, {0, 1}};
  const std::vector<double> z{1, 0, 1, 1, 0};
  const std::vector<int> a{1, 1, 0, 0, 1};
  const auto fit = propensity_fit(0.7, -1.4, 0.5);
  const Network n1 = build_network(5, e1);
  // Relabel: old node k becomes node (k == 0 ? 0 : 5 - k).
  const Network n2 = build_network(5, e2);
  const std::vector<double> z2{z[0], z[4], z[3], z[2], z[1]};
  const std::vector<int> a2{a[0], a[4], a[3], a[2], a[1]};
  const double f1 = propensity_density(n1, 0, a, binary_design(z), fit);
  const double f2 = propensity_density(n2, 0, a2, binary_design(z2), fit);
  CHECK(f1 == doctest::Approx(f2).epsilon(1e-14));
  const double f41 = propensity_density(n1, 0, a, binary_design(z), fit, 41);
  CHECK(std::abs(f1 - f41) < 1e-8);
  CHECK_THROWS_AS(propensity_density(n1, 0, a, binary_design(z), fit, 10), InputError);
  CHECK_THROWS_AS(propensity_density(n1, 0, a, binary_design(z), fit, 9), InputError);
}

TEST_CASE("positivity failure names the node") {
  const Network net = star(3);
  const std::vector<int> a{1, 1, 1, 1};
  try {
    propensity_density(net, 2, a, binary_design({0, 0, 0, 0}), propensity_fit(-400, 0, 0));
    FAIL("expected PositivityError");
  } catch (const PositivityError& e) {
    CHECK(e.node() == 2);
  }
}

TEST_CASE("censoring survival") {
  Eigen::RowVectorXd z0(2), z1(2);
  z0 << 1, 0;
  z1 << 1, 1;
  LogisticFit zero;
  zero.coefficients = Eigen::VectorXd::Zero(2);
  CHECK(censoring_survival(zero, z0) == doctest::Approx(0.5));
  LogisticFit dgp;
  dgp.coefficients = Eigen::Vector2d(-3, 2);
  CHECK(censoring_survival(dgp, z0) == doctest::Approx(0.9526).epsilon(1e-4));
  MixedLogisticFit mixed;
  mixed.fixed_coefficients = Eigen::Vector2d(-3, 2);
  mixed.re_sd = 0.3;
  CHECK(censoring_survival(mixed, z1, 0.3) == doctest::Approx(0.6682).epsilon(1e-4));
  CHECK(censoring_survival(mixed, z1, std::nullopt) == doctest::Approx(1 - sigmoid(-1)));
  CHECK(survival_from_predictor(-800) == 1.0);
  CHECK(survival_from_predictor(40) == doctest::Approx(std::exp(-40.0)).epsilon(1e-12));
}

TEST_CASE("weight diagnostics") {
  const std::vector<double> f{0.25, 0.01, 0.5};
  const std::vector<double> s{0.5, 0.9, 0.4};
  const std::vector<int> c{0, 0, 1};
  const WeightReport r = weight_diagnostics(f, s, c);
  CHECK(*r.weight[0] == doctest::Approx(8.0));
  CHECK(*r.weight[1] == doctest::Approx(1 / 0.009));
  CHECK_FALSE(r.weight[2].has_value());
  CHECK(r.survival[2] == 0.4);
  CHECK_FALSE(r.flagged[0]);
  CHECK(r.flagged[1]);
  CHECK_FALSE(r.flagged[2]);
  CHECK(r.flagged_count == 1);
  CHECK(r.min_weight == doctest::Approx(8.0));
  CHECK(r.max_weight == doctest::Approx(1 / 0.009));
  const WeightReport strict = weight_diagnostics(f, s, c, 5.0);
  CHECK(strict.flagged_count == 2);
}
