#include "netspill/weights.hpp"

#include "netspill/errors.hpp"
#include "netspill/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace netspill {

namespace {

const double kLogPositivityFloor = std::log(1e-300);

void check_quad_nodes(int quad_nodes) {
  if (quad_nodes < 11 || quad_nodes % 2 == 0) {
    throw InputError("quadrature node count must be odd and at least 11, got " + std::to_string(quad_nodes));
  }
}

void check_count(int s, int d) {
  if (d < 0 || s < 0 || s > d) {
    throw InputError("treated count " + std::to_string(s) + " is outside 0.." + std::to_string(d));
  }
}

}  // namespace

Allocation::Allocation(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("allocation must lie strictly between 0 and 1");
}

double pi_neighbors(int s, int d, Allocation alloc) {
  check_count(s, d);
  const double a = alloc.value();
  return std::pow(a, s) * std::pow(1.0 - a, d - s);
}

double pi_joint(int a, int s, int d, Allocation alloc) {
  if (a != 0 && a != 1) throw InputError("exposure must be 0 or 1");
  const double own = a == 1 ? alloc.value() : 1.0 - alloc.value();
  return own * pi_neighbors(s, d, alloc);
}

double log_neighborhood_density(const Network& net, NodeId i, std::span<const int> exposure,
                                std::span<const double> eta, double sd, const GaussHermiteRule& rule) {
  const auto nbrs = net.neighbors(i);
  thread_local std::vector<double> local_eta;
  thread_local std::vector<int> local_a;
  local_eta.clear();
  local_a.clear();
  local_eta.push_back(eta[static_cast<std::size_t>(i)]);
  local_a.push_back(exposure[static_cast<std::size_t>(i)]);
  for (NodeId j : nbrs) {
    local_eta.push_back(eta[static_cast<std::size_t>(j)]);
    local_a.push_back(exposure[static_cast<std::size_t>(j)]);
  }
  return integrate_random_intercept(local_eta, local_a, sd, rule).log_value;
}

double propensity_density(const Network& net, NodeId i, std::span<const int> exposure, const DesignMatrix& design,
                          const MixedLogisticFit& fit, int quad_nodes) {
  check_quad_nodes(quad_nodes);
  if (i < 0 || static_cast<std::size_t>(i) >= net.node_count()) throw InputError("node index out of range");
  if (design.rows() != static_cast<Eigen::Index>(net.node_count()) || exposure.size() != net.node_count()) {
    throw InputError("propensity inputs do not match the network size");
  }
  const Eigen::VectorXd eta = design.values * fit.fixed_coefficients;
  const double log_f = log_neighborhood_density(net, i, exposure, std::span<const double>(eta.data(), eta.size()),
                                                fit.re_sd, GaussHermiteRule::get(quad_nodes));
  if (!(log_f > kLogPositivityFloor)) {
    throw PositivityError("propensity density underflows for node " + std::to_string(i), i);
  }
  return std::exp(log_f);
}

Eigen::VectorXd propensity_densities(const Network& net, std::span<const int> exposure, const DesignMatrix& design,
                                     const Eigen::VectorXd& coefficients, double sd, int quad_nodes) {
  check_quad_nodes(quad_nodes);
  const auto n = static_cast<Eigen::Index>(net.node_count());
  if (design.rows() != n || exposure.size() != net.node_count()) {
    throw InputError("propensity inputs do not match the network size");
  }
  const Eigen::VectorXd eta = design.values * coefficients;
  const std::span<const double> eta_span(eta.data(), eta.size());
  const auto& rule = GaussHermiteRule::get(quad_nodes);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double log_f = log_neighborhood_density(net, static_cast<NodeId>(i), exposure, eta_span, sd, rule);
    if (!(log_f > kLogPositivityFloor)) {
      throw PositivityError("propensity density underflows for node " + std::to_string(i), static_cast<long>(i));
    }
    out[i] = std::exp(log_f);
  }
  return out;
}

NodeFactors neighborhood_counts(const Network& net, std::span<const int> exposure) {
  if (exposure.size() != net.node_count()) throw InputError("exposure length does not match the network size");
  NodeFactors out;
  out.degree.resize(net.node_count());
  out.treated_neighbors.resize(net.node_count());
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const auto nbrs = net.neighbors(static_cast<NodeId>(i));
    out.degree[i] = static_cast<int>(nbrs.size());
    int s = 0;
    for (NodeId j : nbrs) s += exposure[static_cast<std::size_t>(j)];
    out.treated_neighbors[i] = s;
  }
  return out;
}

double survival_from_predictor(double eta) noexcept { return inv_logit(-eta); }

double censoring_survival(const LogisticFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& x_row) {
  if (x_row.size() != fit.coefficients.size()) throw InputError("covariate row length does not match coefficients");
  return survival_from_predictor(x_row.dot(fit.coefficients.transpose()));
}

double censoring_survival(const MixedLogisticFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& x_row,
                          std::optional<double> component_mode) {
  if (x_row.size() != fit.fixed_coefficients.size()) {
    throw InputError("covariate row length does not match coefficients");
  }
  return survival_from_predictor(x_row.dot(fit.fixed_coefficients.transpose()) + component_mode.value_or(0.0));
}

WeightReport weight_diagnostics(std::span<const double> density, std::span<const double> survival,
                                std::span<const int> censored, double threshold) {
  if (density.size() != survival.size() || density.size() != censored.size()) {
    throw InputError("weight diagnostics: input lengths differ");
  }
  if (!(threshold > 0)) throw InputError("weight threshold must be positive");
  WeightReport report;
  report.threshold = threshold;
  report.density.assign(density.begin(), density.end());
  report.survival.assign(survival.begin(), survival.end());
  report.weight.resize(density.size());
  report.flagged.assign(density.size(), false);
  double sum = 0, sum_sq = 0;
  std::size_t present = 0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (censored[i] == 1) continue;
    const double w = 1.0 / (density[i] * survival[i]);
    report.weight[i] = w;
    if (w > threshold) {
      report.flagged[i] = true;
      ++report.flagged_count;
    }
    if (present == 0) {
      report.min_weight = report.max_weight = w;
    } else {
      report.min_weight = std::min(report.min_weight, w);
      report.max_weight = std::max(report.max_weight, w);
    }
    sum += w;
    sum_sq += w * w;
    ++present;
  }
  if (present > 1) {
    const double mean = sum / static_cast<double>(present);
    const double var = std::max(0.0, (sum_sq - static_cast<double>(present) * mean * mean) /
                                         static_cast<double>(present - 1));
    report.cv = std::sqrt(var) / mean;
  }
  return report;
}

}  // namespace netspill
