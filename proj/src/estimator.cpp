#include "netspill/estimator.hpp"

#include "netspill/errors.hpp"
#include "netspill/log.hpp"
#include "netspill/variance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace netspill {

std::string to_string(Arm arm) {
  switch (arm) {
    case Arm::Unexposed:
      return "unexposed";
    case Arm::Exposed:
      return "exposed";
    case Arm::Marginal:
      return "marginal";
  }
  return "marginal";
}

std::string to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::Direct:
      return "direct";
    case EffectKind::Indirect:
      return "indirect";
    case EffectKind::Total:
      return "total";
    case EffectKind::Overall:
      return "overall";
  }
  return "direct";
}

namespace {

void check_factors(const StudyData& data, const NodeFactors& factors) {
  const auto n = data.size();
  if (static_cast<std::size_t>(factors.density.size()) != n || static_cast<std::size_t>(factors.survival.size()) != n ||
      factors.degree.size() != n || factors.treated_neighbors.size() != n) {
    throw InputError("weight factors do not match the data");
  }
}

}  // namespace

Eigen::VectorXd ipcw_terms(const StudyData& data, const NodeFactors& factors, Arm arm, Allocation alloc) {
  check_factors(data, factors);
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::VectorXd terms = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (data.censored[u] == 1) continue;
    const int a = data.exposure[u];
    double pi = 0;
    if (arm == Arm::Marginal) {
      pi = pi_joint(a, factors.treated_neighbors[u], factors.degree[u], alloc);
    } else {
      if (a != static_cast<int>(arm)) continue;
      pi = pi_neighbors(factors.treated_neighbors[u], factors.degree[u], alloc);
    }
    terms[i] = *data.outcome[u] * pi / (factors.density[i] * factors.survival[i]);
  }
  return terms;
}

double ipcw_mean(const StudyData& data, const NodeFactors& factors, Arm arm, Allocation alloc) {
  if (data.size() == 0) throw InputError("cannot estimate from empty data");
  bool any_observed = false;
  for (int c : data.censored) any_observed = any_observed || c == 0;
  if (!any_observed) warn("every outcome is censored; the estimate is degenerate");
  return ipcw_terms(data, factors, arm, alloc).mean();
}

AvgOutcomeEstimate avg_outcome(const Network& net, const StudyData& data, int a, Allocation alloc,
                               const NuisanceFits& fits) {
  if (a != 0 && a != 1) throw InputError("arm must be 0 or 1");
  const Arm arm = a == 1 ? Arm::Exposed : Arm::Unexposed;
  const NodeFactors factors = node_factors(net, data, fits);
  return AvgOutcomeEstimate{arm, alloc, ipcw_mean(data, factors, arm, alloc), static_cast<Eigen::Index>(arm)};
}

AvgOutcomeEstimate avg_outcome_marginal(const Network& net, const StudyData& data, Allocation alloc,
                                        const NuisanceFits& fits) {
  if (data.size() == 0) throw InputError("cannot estimate from empty data");
  const NodeFactors factors = node_factors(net, data, fits);
  return AvgOutcomeEstimate{Arm::Marginal, alloc, ipcw_mean(data, factors, Arm::Marginal, alloc),
                            static_cast<Eigen::Index>(Arm::Marginal)};
}

Eigen::VectorXd TargetEstimates::as_vector() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) out[static_cast<Eigen::Index>(k)] = values[k].value;
  return out;
}

TargetEstimates estimate_targets(const StudyData& data, const NodeFactors& factors, std::span<const Allocation> allocs) {
  TargetEstimates out;
  out.allocs.assign(allocs.begin(), allocs.end());
  for (std::size_t k = 0; k < allocs.size(); ++k) {
    for (Arm arm : {Arm::Unexposed, Arm::Exposed, Arm::Marginal}) {
      out.values.push_back(AvgOutcomeEstimate{arm, allocs[k], ipcw_mean(data, factors, arm, allocs[k]),
                                              static_cast<Eigen::Index>(3 * k + static_cast<std::size_t>(arm))});
    }
  }
  return out;
}

EffectEstimate contrast(const TargetEstimates& targets, EffectKind kind, std::size_t k1, std::size_t k0,
                        const Eigen::MatrixXd* target_covariance) {
  if (k1 >= targets.allocs.size() || k0 >= targets.allocs.size()) throw InputError("allocation index out of range");
  const AvgOutcomeEstimate* plus = nullptr;
  const AvgOutcomeEstimate* minus = nullptr;
  switch (kind) {
    case EffectKind::Direct:
      plus = &targets.get(Arm::Exposed, k1);
      minus = &targets.get(Arm::Unexposed, k1);
      break;
    case EffectKind::Indirect:
      plus = &targets.get(Arm::Unexposed, k1);
      minus = &targets.get(Arm::Unexposed, k0);
      break;
    case EffectKind::Total:
      plus = &targets.get(Arm::Exposed, k1);
      minus = &targets.get(Arm::Unexposed, k0);
      break;
    case EffectKind::Overall:
      plus = &targets.get(Arm::Marginal, k1);
      minus = &targets.get(Arm::Marginal, k0);
      break;
  }
  EffectEstimate e;
  e.kind = kind;
  e.alpha1 = targets.allocs[k1].value();
  if (kind != EffectKind::Direct) e.alpha0 = targets.allocs[k0].value();
  e.rd = plus->value - minus->value;
  if (target_covariance) {
    const double se = contrast_se(*target_covariance, plus->theta_index, minus->theta_index);
    e.se = se;
    e.ci_lo = e.rd - kWaldZ * se;
    e.ci_hi = e.rd + kWaldZ * se;
  }
  return e;
}

std::vector<std::pair<std::size_t, std::size_t>> allocation_pairs(std::span<const Allocation> allocs) {
  std::vector<std::size_t> order(allocs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return allocs[a].value() < allocs[b].value(); });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (allocs[order[k]].value() == allocs[order[k - 1]].value()) throw InputError("allocations must be distinct");
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t gap = 1; gap < order.size(); ++gap) {
    for (std::size_t k = 0; k + gap < order.size(); ++k) pairs.emplace_back(order[k + gap], order[k]);
  }
  return pairs;
}

std::vector<EffectEstimate> effects(const TargetEstimates& targets, const Eigen::MatrixXd* target_covariance) {
  const auto pairs = allocation_pairs(targets.allocs);
  std::vector<EffectEstimate> out;
  for (std::size_t k = 0; k < targets.allocs.size(); ++k) {
    out.push_back(contrast(targets, EffectKind::Direct, k, k, target_covariance));
  }
  for (EffectKind kind : {EffectKind::Indirect, EffectKind::Total, EffectKind::Overall}) {
    for (const auto& [k1, k0] : pairs) out.push_back(contrast(targets, kind, k1, k0, target_covariance));
  }
  return out;
}

PotentialOutcomeTable::PotentialOutcomeTable(std::vector<int> degrees) : degrees_(std::move(degrees)) {
  offsets_.reserve(degrees_.size() + 1);
  offsets_.push_back(0);
  for (int d : degrees_) {
    if (d < 0) throw InputError("degrees must be nonnegative");
    offsets_.push_back(offsets_.back() + 2 * static_cast<std::size_t>(d + 1));
  }
  values_.assign(offsets_.back(), 0.0);
}

std::size_t PotentialOutcomeTable::index(NodeId i, int a, int s) const {
  const auto u = static_cast<std::size_t>(i);
  if (i < 0 || u >= degrees_.size()) throw InputError("node index out of range");
  if ((a != 0 && a != 1) || s < 0 || s > degrees_[u]) throw InputError("potential outcome pattern out of range");
  return offsets_[u] + static_cast<std::size_t>(a) * static_cast<std::size_t>(degrees_[u] + 1) +
         static_cast<std::size_t>(s);
}

namespace {

// Binomial(d, alpha) probabilities of s = 0..d, via log-gamma for large d.
std::vector<double> binomial_pmf(int d, double alpha) {
  std::vector<double> pmf(static_cast<std::size_t>(d + 1));
  const double la = std::log(alpha);
  const double lb = std::log1p(-alpha);
  for (int s = 0; s <= d; ++s) {
    const double log_choose = std::lgamma(d + 1.0) - std::lgamma(s + 1.0) - std::lgamma(d - s + 1.0);
    pmf[static_cast<std::size_t>(s)] = std::exp(log_choose + s * la + (d - s) * lb);
  }
  return pmf;
}

}  // namespace

TrueValues true_values(const PotentialOutcomeTable& outcomes, std::span<const Allocation> allocs) {
  const std::size_t n = outcomes.size();
  if (n == 0) throw InputError("potential outcome table is empty");
  TrueValues out;
  out.allocs.assign(allocs.begin(), allocs.end());
  out.values.assign(3 * allocs.size(), 0.0);
  for (std::size_t k = 0; k < allocs.size(); ++k) {
    const double alpha = allocs[k].value();
    double sum0 = 0, sum1 = 0;
    int cached_degree = -1;
    std::vector<double> pmf;
    for (std::size_t i = 0; i < n; ++i) {
      const auto node = static_cast<NodeId>(i);
      const int d = outcomes.degree(node);
      if (d != cached_degree) {
        pmf = binomial_pmf(d, alpha);
        cached_degree = d;
      }
      for (int s = 0; s <= d; ++s) {
        sum0 += pmf[static_cast<std::size_t>(s)] * outcomes.at(node, 0, s);
        sum1 += pmf[static_cast<std::size_t>(s)] * outcomes.at(node, 1, s);
      }
    }
    const double y0 = sum0 / static_cast<double>(n);
    const double y1 = sum1 / static_cast<double>(n);
    out.values[3 * k] = y0;
    out.values[3 * k + 1] = y1;
    out.values[3 * k + 2] = alpha * y1 + (1.0 - alpha) * y0;
  }
  return out;
}

TrueValues true_values_enumerated(const Network& net, const PatternOutcome& outcome, std::span<const Allocation> allocs,
                                  int enumeration_cap, int mc_draws, std::uint64_t mc_seed) {
  const std::size_t n = net.node_count();
  if (n == 0) throw InputError("network is empty");
  if (enumeration_cap < 0 || enumeration_cap > 30) throw InputError("enumeration cap must be in 0..30");
  if (mc_draws < 1) throw InputError("Monte-Carlo draw count must be positive");
  TrueValues out;
  out.allocs.assign(allocs.begin(), allocs.end());
  out.values.assign(3 * allocs.size(), 0.0);
  std::vector<int> pattern;
  for (std::size_t k = 0; k < allocs.size(); ++k) {
    const double alpha = allocs[k].value();
    double sum0 = 0, sum1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto node = static_cast<NodeId>(i);
      const int d = net.degree(node);
      pattern.assign(static_cast<std::size_t>(d), 0);
      if (d <= enumeration_cap) {
        const std::uint64_t count = std::uint64_t{1} << d;
        for (std::uint64_t mask = 0; mask < count; ++mask) {
          int s = 0;
          for (int b = 0; b < d; ++b) {
            pattern[static_cast<std::size_t>(b)] = static_cast<int>((mask >> b) & 1U);
            s += pattern[static_cast<std::size_t>(b)];
          }
          const double w = pi_neighbors(s, d, allocs[k]);
          sum0 += w * outcome(node, 0, pattern);
          sum1 += w * outcome(node, 1, pattern);
        }
      } else {
        out.monte_carlo = true;
        Rng rng = make_stream(mc_seed, i);
        double acc0 = 0, acc1 = 0;
        for (int r = 0; r < mc_draws; ++r) {
          for (auto& v : pattern) v = draw_bernoulli(rng, alpha);
          acc0 += outcome(node, 0, pattern);
          acc1 += outcome(node, 1, pattern);
        }
        sum0 += acc0 / mc_draws;
        sum1 += acc1 / mc_draws;
      }
    }
    const double y0 = sum0 / static_cast<double>(n);
    const double y1 = sum1 / static_cast<double>(n);
    out.values[3 * k] = y0;
    out.values[3 * k + 1] = y1;
    out.values[3 * k + 2] = alpha * y1 + (1.0 - alpha) * y0;
  }
  if (out.monte_carlo) warn("true values: some degrees exceed the enumeration cap; Monte-Carlo averages were used");
  return out;
}

}  // namespace netspill
