#include "doctest.h"

#include "netspill/errors.hpp"
#include "netspill/estimator.hpp"
#include "netspill/log.hpp"

#include "oracles.hpp"

#include <cmath>
#include <vector>

using namespace netspill;
using namespace netspill::oracle;

namespace {

Network make_net(std::size_t n, std::vector<Edge> edges) { return build_network(n, edges); }

StudyData make_data(std::vector<int> a, std::vector<int> c, std::vector<std::optional<double>> y) {
  StudyData d;
  d.exposure = std::move(a);
  d.censored = std::move(c);
  d.outcome = std::move(y);
  d.covariates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.exposure.size()), 0);
  return d;
}

NodeFactors make_factors(const Network& net, const StudyData& data, std::vector<double> f, std::vector<double> s) {
  NodeFactors out = neighborhood_counts(net, data.exposure);
  out.density = Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  out.survival = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return out;
}

double binom_pmf(int s, int d, double p) {
  return std::tgamma(d + 1.0) / (std::tgamma(s + 1.0) * std::tgamma(d - s + 1.0)) * std::pow(p, s) *
         std::pow(1 - p, d - s);
}

}  // namespace

TEST_CASE("IPCW mean on a hand-evaluated three-node path") {
  const Network net = make_net(3, {{0, 1}, {1, 2}});
  const StudyData data = make_data({1, 1, 1}, {0, 0, 0}, {1.0, 1.0, 1.0});
  const NodeFactors fac = make_factors(net, data, {0.2, 0.1, 0.4}, {0.8, 0.5, 1.0});
  const Allocation alpha{0.5};
  // Ends have one exposed neighbour, the middle two.
  const double expected = (0.5 / (0.2 * 0.8) + 0.25 / (0.1 * 0.5) + 0.5 / (0.4 * 1.0)) / 3.0;
  CHECK(ipcw_mean(data, fac, Arm::Exposed, alpha) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(ipcw_mean(data, fac, Arm::Unexposed, alpha) == 0.0);
  const Eigen::VectorXd terms = ipcw_terms(data, fac, Arm::Exposed, alpha);
  CHECK(terms[1] == doctest::Approx(5.0));
}

TEST_CASE("censored and opposite-arm nodes count in the denominator only") {
  const Network net = make_net(4, {{0, 1}, {2, 3}});
  const StudyData data = make_data({1, 0, 1, 1}, {0, 0, 1, 0}, {1.0, 1.0, std::nullopt, 0.5});
  const NodeFactors fac = make_factors(net, data, {0.5, 0.5, 0.5, 0.5}, {1, 1, 1, 1});
  const Allocation alpha{0.5};
  // Node 0: neighbour unexposed, pi = 0.5. Node 3: neighbour exposed, pi = 0.5.
  CHECK(ipcw_mean(data, fac, Arm::Exposed, alpha) == doctest::Approx((1.0 + 0.5) / 4.0));
}

TEST_CASE("every outcome censored gives zero with a warning") {
  const Network net = make_net(2, {{0, 1}});
  const StudyData data = make_data({1, 0}, {1, 1}, {std::nullopt, std::nullopt});
  const NodeFactors fac = make_factors(net, data, {0.5, 0.5}, {0.5, 0.5});
  int warnings = 0;
  const WarningSink old = set_warning_sink([&](const std::string&) { ++warnings; });
  CHECK(ipcw_mean(data, fac, Arm::Exposed, Allocation{0.5}) == 0.0);
  set_warning_sink(old);
  CHECK(warnings == 1);
}

TEST_CASE("single node marginal estimate") {
  const Network net = make_net(1, {});
  const StudyData data = make_data({1}, {0}, {1.0});
  const NodeFactors fac = make_factors(net, data, {0.5}, {0.5});
  CHECK(ipcw_mean(data, fac, Arm::Marginal, Allocation{0.25}) == doctest::Approx(1.0));
  const StudyData empty = make_data({}, {}, {});
  const NodeFactors none = make_factors(make_net(0, {}), empty, {}, {});
  CHECK_THROWS_AS(ipcw_mean(empty, none, Arm::Marginal, Allocation{0.25}), InputError);
}

TEST_CASE("marginal estimate is the allocation-weighted mix of the arms") {
  Lcg g{7};
  const Network net = make_net(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> a(6), c(6);
    std::vector<std::optional<double>> y(6);
    std::vector<double> f(6), s(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = g.next() < 0.5;
      c[i] = g.next() < 0.2;
      if (!c[i]) y[i] = g.next();
      f[i] = 0.05 + 0.9 * g.next();
      s[i] = 0.05 + 0.9 * g.next();
    }
    const StudyData data = make_data(a, c, y);
    const NodeFactors fac = make_factors(net, data, f, s);
    for (double p : {0.2, 0.5, 0.9}) {
      const Allocation alpha{p};
      const double y1 = ipcw_mean(data, fac, Arm::Exposed, alpha);
      const double y0 = ipcw_mean(data, fac, Arm::Unexposed, alpha);
      const double ym = ipcw_mean(data, fac, Arm::Marginal, alpha);
      CHECK(std::abs(ym - (p * y1 + (1 - p) * y0)) < 1e-12);
    }
  }
}

TEST_CASE("uncensored data with unit survival matches a direct IPW computation") {
  Lcg g{11};
  const Network net = make_net(5, {{0, 1}, {0, 2}, {0, 3}, {3, 4}});
  std::vector<int> a(5), c(5, 0);
  std::vector<std::optional<double>> y(5);
  std::vector<double> f(5), s(5, 1.0);
  for (int i = 0; i < 5; ++i) {
    a[i] = g.next() < 0.6;
    y[i] = g.next() < 0.4 ? 1.0 : 0.0;
    f[i] = 0.1 + 0.5 * g.next();
  }
  const StudyData data = make_data(a, c, y);
  const NodeFactors fac = make_factors(net, data, f, s);
  const Allocation alpha{0.3};
  for (int arm = 0; arm <= 1; ++arm) {
    double sum = 0.0;
    for (NodeId i = 0; i < 5; ++i) {
      if (a[static_cast<std::size_t>(i)] != arm) continue;
      int treated = 0, d = 0;
      for (NodeId j : net.neighbors(i)) {
        ++d;
        treated += a[static_cast<std::size_t>(j)];
      }
      const double pi = std::pow(0.3, treated) * std::pow(0.7, d - treated);
      sum += *y[static_cast<std::size_t>(i)] * pi / f[static_cast<std::size_t>(i)];
    }
    CHECK(ipcw_mean(data, fac, static_cast<Arm>(arm), alpha) == doctest::Approx(sum / 5).epsilon(1e-14));
  }
}

TEST_CASE("IPCW estimator is unbiased under known weights on a four-node component") {
  // Star-plus-tail: 0-1, 0-2, 2-3. Exposure and censoring are independent
  // Bernoulli draws with known probabilities, so f and s are exact.
  const Network net = make_net(4, {{0, 1}, {0, 2}, {2, 3}});
  const std::vector<double> p_expose{0.3, 0.6, 0.5, 0.8};
  const std::vector<double> p_censor{0.1, 0.4, 0.25, 0.3};
  PotentialOutcomeTable table({2, 1, 2, 1});
  Lcg g{3};
  for (NodeId i = 0; i < 4; ++i) {
    for (int a = 0; a <= 1; ++a) {
      for (int s = 0; s <= table.degree(i); ++s) table.at(i, a, s) = g.next();
    }
  }
  const std::vector<Allocation> allocs{Allocation{0.25}, Allocation{0.6}};
  const TrueValues truth = true_values(table, allocs);

  const WarningSink old = set_warning_sink([](const std::string&) {});
  const std::vector<double> expected = exhaustive_ipcw_expectation(net, p_expose, p_censor, table, allocs);
  set_warning_sink(old);
  for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(expected[k] - truth.values[k]) < 1e-12);
}

TEST_CASE("contrasts and effect layout") {
  TargetEstimates t;
  t.allocs = {Allocation{0.25}, Allocation{0.5}, Allocation{0.75}};
  const double vals[] = {0.30, 0.20, 0.225, 0.25, 0.18, 0.215, 0.22, 0.15, 0.1725};
  for (std::size_t k = 0; k < 9; ++k) {
    t.values.push_back({static_cast<Arm>(k % 3), t.allocs[k / 3], vals[k], static_cast<Eigen::Index>(k)});
  }
  const auto pairs = allocation_pairs(t.allocs);
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0] == std::pair<std::size_t, std::size_t>{1, 0});
  CHECK(pairs[1] == std::pair<std::size_t, std::size_t>{2, 1});
  CHECK(pairs[2] == std::pair<std::size_t, std::size_t>{2, 0});

  const auto eff = effects(t);
  REQUIRE(eff.size() == 12);
  CHECK(eff[0].kind == EffectKind::Direct);
  CHECK(eff[0].rd == doctest::Approx(0.20 - 0.30));
  CHECK_FALSE(eff[0].alpha0.has_value());
  CHECK_FALSE(eff[0].se.has_value());
  CHECK(eff[3].kind == EffectKind::Indirect);
  CHECK(eff[3].rd == doctest::Approx(0.25 - 0.30));
  CHECK(eff[6].kind == EffectKind::Total);
  CHECK(eff[6].rd == doctest::Approx(0.18 - 0.30));
  CHECK(eff[9].kind == EffectKind::Overall);
  CHECK(eff[11].rd == doctest::Approx(0.1725 - 0.225));
  CHECK(*eff[11].alpha0 == 0.25);
  CHECK(eff[11].alpha1 == 0.75);

  // Swapping the allocations flips the sign.
  for (EffectKind kind : {EffectKind::Indirect, EffectKind::Overall}) {
    CHECK(contrast(t, kind, 0, 2).rd == doctest::Approx(-contrast(t, kind, 2, 0).rd));
  }

  SUBCASE("identical arms give a zero direct effect") {
    TargetEstimates same = t;
    same.values[1].value = same.values[0].value;
    CHECK(effects(same)[0].rd == 0.0);
  }
  SUBCASE("standard errors and Wald intervals") {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(9, 9);
    cov(0, 0) = 0.04;
    cov(1, 1) = 0.09;
    const auto with_se = effects(t, &cov);
    CHECK(*with_se[0].se == doctest::Approx(std::sqrt(0.13)));
    CHECK(*with_se[0].ci_lo == doctest::Approx(with_se[0].rd - 1.959964 * std::sqrt(0.13)));
    CHECK(*with_se[0].ci_hi == doctest::Approx(with_se[0].rd + 1.959964 * std::sqrt(0.13)));
    for (const auto& e : with_se) CHECK((*e.ci_lo <= e.rd && e.rd <= *e.ci_hi));
  }
  SUBCASE("repeated allocations are rejected") {
    TargetEstimates dup;
    dup.allocs = {Allocation{0.5}, Allocation{0.5}};
    CHECK_THROWS_AS(allocation_pairs(dup.allocs), InputError);
  }
}

TEST_CASE("true values of a constant outcome") {
  PotentialOutcomeTable table({0, 1, 3, 2});
  for (NodeId i = 0; i < 4; ++i) {
    for (int a = 0; a <= 1; ++a) {
      for (int s = 0; s <= table.degree(i); ++s) table.at(i, a, s) = 0.37;
    }
  }
  const std::vector<Allocation> allocs{Allocation{0.1}, Allocation{0.5}, Allocation{0.95}};
  for (double v : true_values(table, allocs).values) CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
}

TEST_CASE("true value of a neighbour-exposure indicator is the allocation") {
  PotentialOutcomeTable table({1, 1});
  for (NodeId i = 0; i < 2; ++i) {
    for (int a = 0; a <= 1; ++a) {
      table.at(i, a, 0) = 0.0;
      table.at(i, a, 1) = 1.0;
    }
  }
  const std::vector<Allocation> allocs{Allocation{0.3}};
  CHECK(true_values(table, allocs).get(Arm::Unexposed, 0) == doctest::Approx(0.3));
}

TEST_CASE("binomial true values agree with pattern enumeration") {
  const Network net = make_net(7, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {5, 6}});
  std::vector<int> degrees(7);
  for (NodeId i = 0; i < 7; ++i) degrees[static_cast<std::size_t>(i)] = static_cast<int>(net.degree(i));
  PotentialOutcomeTable table(degrees);
  Lcg g{5};
  for (NodeId i = 0; i < 7; ++i) {
    for (int a = 0; a <= 1; ++a) {
      for (int s = 0; s <= table.degree(i); ++s) table.at(i, a, s) = g.next();
    }
  }
  const PatternOutcome by_pattern = [&](NodeId i, int a, std::span<const int> nb) {
    int s = 0;
    for (int x : nb) s += x;
    return table.at(i, a, s);
  };
  const std::vector<Allocation> allocs{Allocation{0.25}, Allocation{0.5}, Allocation{0.75}};
  const TrueValues binom = true_values(table, allocs);
  const TrueValues enumerated = true_values_enumerated(net, by_pattern, allocs);
  CHECK_FALSE(enumerated.monte_carlo);
  for (std::size_t k = 0; k < binom.values.size(); ++k) {
    CHECK(std::abs(binom.values[k] - enumerated.values[k]) < 1e-12);
  }

  SUBCASE("independent binomial oracle for one node") {
    double y0 = 0.0;
    for (int s = 0; s <= 4; ++s) y0 += binom_pmf(s, 4, 0.25) * table.at(0, 0, s);
    double others = 0.0;
    for (NodeId i = 1; i < 7; ++i) {
      const int d = table.degree(i);
      for (int s = 0; s <= d; ++s) others += binom_pmf(s, d, 0.25) * table.at(i, 0, s);
    }
    CHECK(binom.get(Arm::Unexposed, 0) == doctest::Approx((y0 + others) / 7).epsilon(1e-13));
  }

  SUBCASE("degrees above the cap use Monte-Carlo draws") {
    int warnings = 0;
    const WarningSink old = set_warning_sink([&](const std::string&) { ++warnings; });
    const TrueValues mc = true_values_enumerated(net, by_pattern, allocs, 2, 100000, 9);
    set_warning_sink(old);
    CHECK(mc.monte_carlo);
    CHECK(warnings == 1);
    for (std::size_t k = 0; k < binom.values.size(); ++k) CHECK(std::abs(binom.values[k] - mc.values[k]) < 0.01);
  }
}

TEST_CASE("true values depend on the exact neighbour pattern when enumerated") {
  // Outcome depends on which neighbour is exposed; the average over patterns
  // under iid Bernoulli(alpha) is the hand value.
  const Network net = make_net(3, {{0, 1}, {0, 2}});
  const PatternOutcome first_only = [](NodeId i, int, std::span<const int> nb) {
    return i == 0 ? static_cast<double>(nb[0]) : 0.0;
  };
  const std::vector<Allocation> allocs{Allocation{0.4}};
  const TrueValues tv = true_values_enumerated(net, first_only, allocs);
  CHECK(tv.get(Arm::Exposed, 0) == doctest::Approx(0.4 / 3));
  CHECK(tv.get(Arm::Marginal, 0) == doctest::Approx(0.4 / 3));
}
