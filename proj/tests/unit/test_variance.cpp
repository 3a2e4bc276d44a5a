#include "doctest.h"

#include "netspill/errors.hpp"
#include "netspill/log.hpp"
#include "netspill/models.hpp"
#include "netspill/sim.hpp"
#include "netspill/variance.hpp"

#include "oracles.hpp"

#include <cmath>
#include <sstream>

using namespace netspill;
using namespace netspill::oracle;

namespace {

struct Fixture {
  Network net;
  StudyData data;
};

Fixture simulated(int m, std::uint64_t seed) {
  Scenario sc;
  sc.network = RegularNetworkSpec{m, 10.0, 4};
  sc.seed = seed;
  Rng net_rng = make_stream(seed, 1000);
  Network net = generate_regular_components(m, 10.0, 4, net_rng);
  Rng rng = make_stream(seed, 0);
  SimDataset ds = generate_dataset(net, sc, rng);
  return {std::move(net), std::move(ds.data)};
}

ModelOptions options(CensoringFitKind kind) {
  ModelOptions o;
  o.censoring_fit = kind;
  o.censoring_covariates = CensoringCovariates::CovariatesOnly;
  return o;
}

const std::vector<Allocation> kAllocs{Allocation{0.25}, Allocation{0.5}, Allocation{0.75}};

// Two disjoint copies of the network and data, node i of the copy being n + i.
Fixture duplicated(const Fixture& f) {
  const auto n = static_cast<NodeId>(f.net.node_count());
  std::vector<Edge> edges = f.net.edge_list();
  const std::size_t e = edges.size();
  for (std::size_t k = 0; k < e; ++k) edges.push_back({edges[k].u + n, edges[k].v + n});
  std::vector<NodeId> rows;
  for (int rep = 0; rep < 2; ++rep) {
    for (NodeId i = 0; i < n; ++i) rows.push_back(i);
  }
  return {build_network(2 * static_cast<std::size_t>(n), edges), f.data.subset(rows)};
}

}  // namespace

TEST_CASE("estimating equations vanish at the fitted parameters") {
  const Fixture f = simulated(60, 21);
  for (CensoringFitKind kind : {CensoringFitKind::Logistic, CensoringFitKind::Mixed}) {
    const NuisanceFits fits = fit_nuisance_models(f.net, f.data, options(kind));
    const EstimatingEquations eq(f.net, f.data, fits, kAllocs, f.net.components());
    const Eigen::MatrixXd psi = eq.component_psi(eq.theta_hat().values);
    CHECK(psi.rows() == 60);
    const Eigen::VectorXd total = psi.colwise().sum().transpose() / psi.rows();
    const Eigen::Index off = eq.theta_hat().target_offset();
    for (Eigen::Index c = 0; c < total.size(); ++c) {
      CAPTURE(c);
      CHECK(std::abs(total[c]) < (c < off ? 1e-5 : 1e-12));
    }
  }
}

TEST_CASE("target rows respond to their own parameter only") {
  const Fixture f = simulated(40, 22);
  const NuisanceFits fits = fit_nuisance_models(f.net, f.data, options(CensoringFitKind::Logistic));
  const EstimatingEquations eq(f.net, f.data, fits, kAllocs, f.net.components());
  const Eigen::VectorXd theta = eq.theta_hat().values;
  const Eigen::Index idx = eq.theta_hat().target_index(Arm::Exposed, 1);
  Eigen::VectorXd bumped = theta;
  bumped[idx] += 0.01;
  const Eigen::MatrixXd diff = eq.component_psi(bumped) - eq.component_psi(theta);
  for (Eigen::Index c = 0; c < diff.cols(); ++c) {
    const double expected = c == idx ? -0.01 : 0.0;
    CHECK(diff.col(c).cwiseAbs().maxCoeff() == doctest::Approx(std::abs(expected)).epsilon(1e-9));
    if (c == idx) CHECK(diff.col(c).maxCoeff() == doctest::Approx(-0.01).epsilon(1e-9));
  }
}

TEST_CASE("sandwich structure") {
  const Fixture f = simulated(60, 23);
  for (CensoringFitKind kind : {CensoringFitKind::Logistic, CensoringFitKind::Mixed}) {
    const NuisanceFits fits = fit_nuisance_models(f.net, f.data, options(kind));
    const SandwichResult sw = sandwich(f.net, f.data, fits, kAllocs, f.net.components());
    const ThetaStack& st = sw.stack;
    const Eigen::Index pp = st.propensity_size, pc = st.censoring_size, off = st.target_offset();
    CHECK(sw.m == 60);
    CHECK(sw.k_hat == doctest::Approx(static_cast<double>(f.net.node_count()) / 60));
    CHECK(st.size() == off + 9);
    CHECK(st.names[static_cast<std::size_t>(st.target_index(Arm::Unexposed, 0))] == "Y(0,0.25)");
    CHECK(st.index_of("Y(0.75)") == st.size() - 1);
    CHECK_THROWS_AS(st.index_of("nope"), InputError);

    CHECK(sw.a.bottomRightCorner(9, 9).isIdentity(0.0));
    CHECK(sw.a.block(0, pp, pp, pc).isZero(0.0));
    CHECK(sw.a.block(pp, 0, pc, pp).isZero(0.0));
    CHECK(sw.a.topRightCorner(off, 9).isZero(0.0));

    CHECK((sw.sigma - sw.sigma.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(sw.sigma.diagonal().minCoeff() > -1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sw.b);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * eig.eigenvalues().cwiseAbs().maxCoeff());

    // Sigma solves A Sigma A' = B / m.
    const Eigen::MatrixXd back = sw.a * sw.sigma * sw.a.transpose() * sw.m;
    CHECK((back - sw.b).cwiseAbs().maxCoeff() < 1e-8 * (1 + sw.b.cwiseAbs().maxCoeff()));

    // Targets agree with the point estimator.
    const NodeFactors fac = node_factors(f.net, f.data, fits);
    const TargetEstimates targets = estimate_targets(f.data, fac, kAllocs);
    for (std::size_t k = 0; k < 9; ++k) {
      CHECK(st.values[off + static_cast<Eigen::Index>(k)] == targets.values[k].value);
    }
    const Eigen::MatrixXd tc = sw.target_covariance();
    CHECK(tc.rows() == 9);
    CHECK(tc(1, 1) == sw.sigma(off + 1, off + 1));
  }
}

TEST_CASE("censoring block of A equals the logistic Fisher information per node") {
  const Fixture f = simulated(50, 24);
  const NuisanceFits fits = fit_nuisance_models(f.net, f.data, options(CensoringFitKind::Logistic));
  const EstimatingEquations eq(f.net, f.data, fits, kAllocs, f.net.components());
  const Eigen::MatrixXd a = eq.compute_A();
  const Eigen::MatrixXd& x = fits.censoring.design.values;
  const Eigen::VectorXd& xi = fits.censoring.logistic.coefficients;
  const Eigen::MatrixXd fisher = logistic_information(x, xi) / static_cast<double>(x.rows());
  const Eigen::Index pp = eq.theta_hat().propensity_size;
  const Eigen::MatrixXd a22 = a.block(pp, pp, x.cols(), x.cols());
  for (Eigen::Index r = 0; r < x.cols(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      CHECK(a22(r, c) == doctest::Approx(fisher(r, c)).epsilon(1e-4));
    }
  }
}

TEST_CASE("duplicating every component halves the covariance") {
  const Fixture f = simulated(30, 25);
  const Fixture d = duplicated(f);
  const NuisanceFits fits = fit_nuisance_models(f.net, f.data, options(CensoringFitKind::Logistic));
  NuisanceFits dup = fit_nuisance_models(d.net, d.data, options(CensoringFitKind::Logistic));
  // Both datasets share one maximiser; pin it to remove optimiser noise.
  dup.propensity.fit.fixed_coefficients = fits.propensity.fit.fixed_coefficients;
  dup.propensity.fit.re_sd = fits.propensity.fit.re_sd;
  dup.censoring.logistic.coefficients = fits.censoring.logistic.coefficients;
  const SandwichResult s1 = sandwich(f.net, f.data, fits, kAllocs, f.net.components());
  const SandwichResult s2 = sandwich(d.net, d.data, dup, kAllocs, d.net.components());
  CHECK(s2.m == 2 * s1.m);
  CHECK(s2.k_hat == doctest::Approx(s1.k_hat));
  const double scale = s1.sigma.cwiseAbs().maxCoeff();
  CHECK((2 * s2.sigma - s1.sigma).cwiseAbs().maxCoeff() < 1e-8 * scale);
}

TEST_CASE("sandwich standard errors agree with the leave-one-component-out jackknife") {
  const int m = 80;
  const Fixture f = simulated(m, 26);
  const NuisanceFits fits = fit_nuisance_models(f.net, f.data, options(CensoringFitKind::Logistic));
  const SandwichResult sw = sandwich(f.net, f.data, fits, kAllocs, f.net.components());
  const Eigen::Index off = sw.stack.target_offset();

  const Eigen::VectorXd jack = jackknife_target_se(f.net, f.data, options(CensoringFitKind::Logistic), kAllocs);
  for (Eigen::Index k = 0; k < 9; ++k) {
    const double ratio = sw.se(off + k) / jack[k];
    CAPTURE(k);
    CHECK(ratio > 0.75);
    CHECK(ratio < 1.25);
  }
}

TEST_CASE("a badly scaled covariate makes the Jacobian ill-conditioned") {
  const Fixture f = simulated(40, 27);
  const NuisanceFits fits = fit_nuisance_models(f.net, f.data, options(CensoringFitKind::Logistic));
  // Same model with the covariate shrunk by 1e-8: the maximiser is unchanged.
  NuisanceFits scaled = fits;
  scaled.propensity.design.values.col(1) *= 1e-8;
  scaled.propensity.fit.fixed_coefficients[1] *= 1e8;
  scaled.censoring.design.values.col(1) *= 1e-8;
  scaled.censoring.logistic.coefficients[1] *= 1e8;
  CHECK_THROWS_AS(sandwich(f.net, f.data, scaled, kAllocs, f.net.components()), NumericalError);
}

TEST_CASE("a single variance group warns") {
  const Fixture f = simulated(20, 28);
  const NuisanceFits fits = fit_nuisance_models(f.net, f.data, options(CensoringFitKind::Logistic));
  Partition one;
  one.labels.assign(f.net.node_count(), 0);
  one.group_count = 1;
  std::vector<std::string> messages;
  const WarningSink old = set_warning_sink([&](const std::string& m) { messages.push_back(m); });
  try {
    sandwich(f.net, f.data, fits, kAllocs, one);
  } catch (const NumericalError&) {
    // Rank-one B may also leave A fine; only the warning is asserted.
  }
  set_warning_sink(old);
  CHECK(messages.size() == 1);
}

TEST_CASE("contrast standard error") {
  Eigen::MatrixXd s(2, 2);
  s << 0.04, 0.0, 0.0, 0.09;
  CHECK(contrast_se(s, 0, 1) == doctest::Approx(std::sqrt(0.13)));
  CHECK(contrast_se(s, 1, 1) == 0.0);
  Eigen::MatrixXd perfect(2, 2);
  perfect << 1.0, 1.0 + 2e-13, 1.0 + 2e-13, 1.0;
  CHECK(contrast_se(perfect, 0, 1) == 0.0);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(contrast_se(bad, 0, 1), NumericalError);
  CHECK_THROWS_AS(contrast_se(s, 0, 2), InputError);
}

TEST_CASE("matrix dump format") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.1, -2.5, 1e-20;
  std::ostringstream out;
  write_matrix(out, m);
  CHECK(out.str() == "1 0.10000000000000001\n-2.5 9.9999999999999995e-21\n");
}
