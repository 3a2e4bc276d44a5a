#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.
// None of them call the quadrature, sandwich or estimator internals they are
// used to check.

#include "netspill/estimator.hpp"
#include "netspill/glm.hpp"
#include "netspill/models.hpp"
#include "netspill/netgraph.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace netspill::oracle {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Deterministic values in (0, 1) for hand-rolled test inputs.
struct Lcg {
  std::uint64_t state;
  double next() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return (static_cast<double>(state >> 11) + 0.5) / 9007199254740992.0;
  }
};

/// Plain Newton-Raphson for the logistic MLE (no step control).
inline Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.cols());
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double p = sigmoid(x.row(i).dot(beta));
      grad += x.row(i).transpose() * (y[static_cast<std::size_t>(i)] - p);
      info += p * (1 - p) * x.row(i).transpose() * x.row(i);
    }
    beta += info.ldlt().solve(grad);
  }
  return beta;
}

/// X' W X at beta.
inline Eigen::MatrixXd logistic_information(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p = sigmoid(x.row(i).dot(beta));
    info += p * (1 - p) * x.row(i).transpose() * x.row(i);
  }
  return info;
}

/// Random-intercept logistic marginal log-likelihood with a 201-point
/// trapezoid rule over +-8 sd (non-adaptive).
inline double trapezoid_marginal(const Eigen::MatrixXd& x, const std::vector<int>& y, const Partition& groups,
                                 const Eigen::VectorXd& beta, double sd) {
  const auto members = groups.members();
  const int points = 201;
  const double lo = -8.0 * sd;
  const double h = 16.0 * sd / (points - 1);
  double total = 0.0;
  std::vector<double> logs(points);
  for (const auto& g : members) {
    double peak = -INFINITY;
    for (int k = 0; k < points; ++k) {
      const double b = lo + k * h;
      double l = -0.5 * b * b / (sd * sd) - std::log(sd * std::sqrt(2 * M_PI));
      for (NodeId i : g) {
        const double eta = x.row(i).dot(beta) + b;
        l += y[static_cast<std::size_t>(i)] * eta - std::log1p(std::exp(eta));
      }
      logs[static_cast<std::size_t>(k)] = l + std::log(k == 0 || k == points - 1 ? 0.5 * h : h);
      peak = std::max(peak, logs[static_cast<std::size_t>(k)]);
    }
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - peak);
    total += peak + std::log(acc);
  }
  return total;
}

/// Maximises the trapezoid likelihood over (beta, log sd): coarse grid on sd,
/// then Newton with finite-difference derivatives. Returns (theta, loglik).
inline std::pair<Eigen::VectorXd, double> mixed_logistic_optimum(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                                                 const Partition& groups) {
  const Eigen::VectorXd start = newton_logistic(x, y);
  Eigen::VectorXd theta(start.size() + 1);
  theta << start, 0.0;
  double best = -INFINITY;
  for (double sd : {0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 1.5}) {
    const double l = trapezoid_marginal(x, y, groups, start, sd);
    if (l > best) {
      best = l;
      theta[start.size()] = std::log(sd);
    }
  }
  auto f = [&](const Eigen::VectorXd& t) {
    return trapezoid_marginal(x, y, groups, t.head(t.size() - 1), std::exp(t[t.size() - 1]));
  };
  const Eigen::Index p = theta.size();
  for (int it = 0; it < 30; ++it) {
    const double h = 1e-4;
    Eigen::VectorXd g(p);
    Eigen::MatrixXd hess(p, p);
    const double f0 = f(theta);
    for (Eigen::Index a = 0; a < p; ++a) {
      Eigen::VectorXd up = theta, dn = theta;
      up[a] += h;
      dn[a] -= h;
      g[a] = (f(up) - f(dn)) / (2 * h);
      hess(a, a) = (f(up) - 2 * f0 + f(dn)) / (h * h);
      for (Eigen::Index b = 0; b < a; ++b) {
        Eigen::VectorXd pp = theta, pm = theta, mp = theta, mm = theta;
        pp[a] += h, pp[b] += h;
        pm[a] += h, pm[b] -= h;
        mp[a] -= h, mp[b] += h;
        mm[a] -= h, mm[b] -= h;
        hess(a, b) = hess(b, a) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h * h);
      }
    }
    const Eigen::VectorXd step = hess.ldlt().solve(-g);
    theta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-9) break;
  }
  return {theta, f(theta)};
}

/// Network and data with one component removed.
inline std::pair<Network, StudyData> drop_component(const Network& net, const StudyData& data, int comp) {
  const Partition& parts = net.components();
  std::vector<NodeId> keep;
  std::vector<NodeId> new_index(net.node_count(), -1);
  for (NodeId i = 0; i < static_cast<NodeId>(net.node_count()); ++i) {
    if (parts.labels[static_cast<std::size_t>(i)] == comp) continue;
    new_index[static_cast<std::size_t>(i)] = static_cast<NodeId>(keep.size());
    keep.push_back(i);
  }
  std::vector<Edge> edges;
  for (const Edge& e : net.edge_list()) {
    const NodeId u = new_index[static_cast<std::size_t>(e.u)];
    const NodeId v = new_index[static_cast<std::size_t>(e.v)];
    if (u >= 0 && v >= 0) edges.push_back({u, v});
  }
  return {build_network(keep.size(), edges), data.subset(keep)};
}

/// Delete-one-component jackknife standard errors of the target estimates,
/// refitting both nuisance models every time.
inline Eigen::VectorXd jackknife_target_se(const Network& net, const StudyData& data, const ModelOptions& options,
                                           const std::vector<Allocation>& allocs) {
  const int m = net.components().group_count;
  std::vector<Eigen::VectorXd> loo;
  for (int comp = 0; comp < m; ++comp) {
    const auto [n2, d2] = drop_component(net, data, comp);
    const NuisanceFits fits = fit_nuisance_models(n2, d2, options);
    loo.push_back(estimate_targets(d2, node_factors(n2, d2, fits), allocs).as_vector());
  }
  const Eigen::Index len = loo.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(len);
  for (const auto& v : loo) mean += v;
  mean /= m;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(len);
  for (const auto& v : loo) var += (v - mean).cwiseAbs2();
  var *= static_cast<double>(m - 1) / m;
  return var.cwiseSqrt();
}

/// Expected IPCW estimates over every exposure and censoring configuration of
/// a small network, with independent Bernoulli exposure and censoring whose
/// probabilities are used as known weights. Outcomes come from `table`.
/// Returns values in the TargetEstimates layout.
inline std::vector<double> exhaustive_ipcw_expectation(const Network& net, const std::vector<double>& p_expose,
                                                       const std::vector<double>& p_censor,
                                                       const PotentialOutcomeTable& table,
                                                       const std::vector<Allocation>& allocs) {
  const std::size_t n = net.node_count();
  std::vector<double> expected(3 * allocs.size(), 0.0);
  for (unsigned amask = 0; amask < (1u << n); ++amask) {
    std::vector<int> a(n);
    double pa = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = (amask >> i) & 1u;
      pa *= a[i] ? p_expose[i] : 1 - p_expose[i];
    }
    NodeFactors fac = neighborhood_counts(net, a);
    fac.density.resize(static_cast<Eigen::Index>(n));
    fac.survival.resize(static_cast<Eigen::Index>(n));
    for (NodeId i = 0; i < static_cast<NodeId>(n); ++i) {
      const auto u = static_cast<std::size_t>(i);
      double f = a[u] ? p_expose[u] : 1 - p_expose[u];
      for (NodeId j : net.neighbors(i)) {
        const auto v = static_cast<std::size_t>(j);
        f *= a[v] ? p_expose[v] : 1 - p_expose[v];
      }
      fac.density[i] = f;
      fac.survival[i] = 1 - p_censor[u];
    }
    for (unsigned cmask = 0; cmask < (1u << n); ++cmask) {
      StudyData data;
      data.exposure = a;
      data.covariates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 0);
      data.censored.resize(n);
      data.outcome.assign(n, std::nullopt);
      double pc = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        data.censored[i] = (cmask >> i) & 1u;
        pc *= data.censored[i] ? p_censor[i] : 1 - p_censor[i];
        if (!data.censored[i]) data.outcome[i] = table.at(static_cast<NodeId>(i), a[i], fac.treated_neighbors[i]);
      }
      const TargetEstimates t = estimate_targets(data, fac, allocs);
      for (std::size_t k = 0; k < expected.size(); ++k) expected[k] += pa * pc * t.values[k].value;
    }
  }
  return expected;
}

}  // namespace netspill::oracle
