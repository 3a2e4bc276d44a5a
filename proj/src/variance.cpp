#include "netspill/variance.hpp"

#include "netspill/errors.hpp"
#include "netspill/log.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace netspill {

Eigen::Index ThetaStack::target_index(Arm arm, std::size_t alloc_index) const {
  if (alloc_index >= allocs.size()) throw InputError("allocation index out of range");
  return target_offset() + static_cast<Eigen::Index>(3 * alloc_index + static_cast<std::size_t>(arm));
}

Eigen::Index ThetaStack::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return static_cast<Eigen::Index>(k);
  }
  throw InputError("no stacked parameter named '" + name + "'");
}

Eigen::MatrixXd SandwichResult::target_covariance() const {
  const Eigen::Index off = stack.target_offset();
  const Eigen::Index len = stack.size() - off;
  return sigma.block(off, off, len, len);
}

double SandwichResult::se(Eigen::Index index) const {
  const double v = sigma(index, index);
  if (v < -1e-12) throw NumericalError("negative variance on the sandwich diagonal");
  return std::sqrt(std::max(0.0, v));
}

namespace {

std::string alloc_label(Allocation a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a.value());
  return buf;
}

}  // namespace

EstimatingEquations::EstimatingEquations(const Network& net, const StudyData& data, const NuisanceFits& fits,
                                         std::span<const Allocation> allocs, const Partition& variance_groups)
    : net_(net),
      data_(data),
      fits_(fits),
      allocs_(allocs.begin(), allocs.end()),
      groups_(variance_groups),
      propensity_lik_(fits.propensity.design, data.exposure, fits.propensity.groups, fits.propensity.quad_nodes),
      censoring_lik_(fits.censoring.design, data.censored, fits.censoring.groups, fits.censoring.mixed.quad_nodes) {
  if (data.size() != net.node_count()) throw InputError("study data does not match the network");
  if (groups_.size() != data.size()) throw InputError("variance grouping does not match the data");
  if (groups_.group_count < 1) throw InputError("variance grouping has no groups");
  if (allocs_.empty()) throw InputError("at least one allocation is required");
  k_hat_ = static_cast<double>(data.size()) / groups_.group_count;

  const auto& prop = fits.propensity;
  const auto& cens = fits.censoring;
  const Eigen::VectorXd prop_params = prop.fit.parameters();
  const Eigen::VectorXd cens_params = cens.parameters();
  stack_.propensity_size = prop_params.size();
  stack_.censoring_size = cens_params.size();
  stack_.propensity_log_sd = !prop.fit.on_boundary();
  stack_.censoring_log_sd = cens.has_log_sd();
  stack_.allocs = allocs_;

  const NodeFactors factors = node_factors(net, data, fits);
  const TargetEstimates targets = estimate_targets(data, factors, allocs_);
  stack_.values.resize(prop_params.size() + cens_params.size() + static_cast<Eigen::Index>(targets.values.size()));
  stack_.values << prop_params, cens_params, targets.as_vector();

  for (const auto& name : prop.design.column_names) stack_.names.push_back("propensity:" + name);
  if (stack_.propensity_log_sd) stack_.names.push_back("propensity:log_sd");
  for (const auto& name : cens.design.column_names) stack_.names.push_back("censoring:" + name);
  if (stack_.censoring_log_sd) stack_.names.push_back("censoring:log_sd");
  for (Allocation a : allocs_) {
    stack_.names.push_back("Y(0," + alloc_label(a) + ")");
    stack_.names.push_back("Y(1," + alloc_label(a) + ")");
    stack_.names.push_back("Y(" + alloc_label(a) + ")");
  }
  censoring_offsets_ = cens.node_offsets();
  counts_ = neighborhood_counts(net, data.exposure);
  density_hat_ = factors.density;
}

Eigen::MatrixXd EstimatingEquations::observation_scores(const Eigen::VectorXd& theta) const {
  const Eigen::Index pp = stack_.propensity_size;
  const Eigen::Index pc = stack_.censoring_size;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(data_.size()), pp + pc);
  out.leftCols(pp) = propensity_lik_.observation_scores(theta.segment(0, pp));
  out.rightCols(pc) = censoring_lik_.observation_scores(theta.segment(pp, pc));
  return out;
}

Eigen::VectorXd EstimatingEquations::propensity_gradient(const Eigen::VectorXd& params) const {
  Eigen::VectorXd g;
  propensity_lik_.log_likelihood(params, g);
  return g;
}

Eigen::VectorXd EstimatingEquations::censoring_gradient(const Eigen::VectorXd& params) const {
  Eigen::VectorXd g;
  censoring_lik_.log_likelihood(params, g);
  return g;
}

Eigen::MatrixXd EstimatingEquations::target_terms(const Eigen::VectorXd& theta, const Eigen::VectorXd* density) const {
  const auto& prop = fits_.propensity;
  const auto& cens = fits_.censoring;
  const Eigen::Index p = prop.design.cols();
  const Eigen::Index q = cens.design.cols();
  const double sd = stack_.propensity_log_sd ? std::exp(theta[p]) : 0.0;
  NodeFactors factors = counts_;
  if (!density && theta.head(stack_.propensity_size) == stack_.values.head(stack_.propensity_size)) {
    density = &density_hat_;
  }
  factors.density =
      density ? *density : propensity_densities(net_, data_.exposure, prop.design, theta.head(p), sd, prop.quad_nodes);
  factors.survival = censoring_survivals(cens.design, theta.segment(stack_.censoring_offset(), q), censoring_offsets_);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(data_.size()), static_cast<Eigen::Index>(3 * allocs_.size()));
  for (std::size_t k = 0; k < allocs_.size(); ++k) {
    for (Arm arm : {Arm::Unexposed, Arm::Exposed, Arm::Marginal}) {
      out.col(static_cast<Eigen::Index>(3 * k + static_cast<std::size_t>(arm))) =
          ipcw_terms(data_, factors, arm, allocs_[k]);
    }
  }
  return out;
}

Eigen::MatrixXd EstimatingEquations::component_psi(const Eigen::VectorXd& theta) const {
  if (theta.size() != stack_.size()) throw InputError("parameter vector has the wrong length");
  const Eigen::Index off = stack_.target_offset();
  Eigen::MatrixXd psi(groups_.group_count, stack_.size());
  psi.leftCols(off) = aggregate_rows(observation_scores(theta), groups_) / k_hat_;
  psi.rightCols(stack_.size() - off) = aggregate_rows(target_terms(theta), groups_) / k_hat_;
  psi.rightCols(stack_.size() - off).rowwise() -= theta.tail(stack_.size() - off).transpose();
  return psi;
}

Eigen::VectorXd EstimatingEquations::component_psi(int nu, const Eigen::VectorXd& theta) const {
  if (nu < 0 || nu >= groups_.group_count) throw InputError("group index out of range");
  return component_psi(theta).row(nu).transpose();
}

Eigen::MatrixXd EstimatingEquations::compute_A() const {
  const Eigen::VectorXd& theta = stack_.values;
  const Eigen::Index size = stack_.size();
  const Eigen::Index pp = stack_.propensity_size;
  const Eigen::Index pc = stack_.censoring_size;
  const Eigen::Index off = stack_.target_offset();
  const double m = groups_.group_count;
  // -(1/m) d/dtheta of sum_nu psi_nu, where each psi_nu carries a 1/k factor.
  const double scale = -1.0 / (m * k_hat_);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size, size);

  for (Eigen::Index c = 0; c < off; ++c) {
    const double h = 1e-5 * (1.0 + std::abs(theta[c]));
    Eigen::VectorXd up = theta;
    Eigen::VectorXd down = theta;
    up[c] += h;
    down[c] -= h;
    if (c < pp) {
      const Eigen::VectorXd d =
          (propensity_gradient(up.segment(0, pp)) - propensity_gradient(down.segment(0, pp))) / (2.0 * h);
      a.block(0, c, pp, 1) = scale * d;
    } else {
      const Eigen::VectorXd d =
          (censoring_gradient(up.segment(pp, pc)) - censoring_gradient(down.segment(pp, pc))) / (2.0 * h);
      a.block(pp, c, pc, 1) = scale * d;
    }
    // Censoring columns leave the propensity block of theta untouched, so
    // target_terms reuses the cached densities for them.
    const Eigen::VectorXd dt =
        (target_terms(up).colwise().sum() - target_terms(down).colwise().sum()).transpose() /
        (2.0 * h);
    a.block(off, c, size - off, 1) = scale * dt;
  }
  a.bottomRightCorner(size - off, size - off).setIdentity();
  return a;
}

Eigen::MatrixXd EstimatingEquations::compute_B() const {
  const Eigen::MatrixXd psi = component_psi(stack_.values);
  return psi.transpose() * psi / static_cast<double>(groups_.group_count);
}

SandwichResult EstimatingEquations::sandwich() const {
  SandwichResult out;
  out.m = groups_.group_count;
  out.k_hat = k_hat_;
  out.stack = stack_;
  out.a = compute_A();
  out.b = compute_B();
  if (out.m == 1) warn("sandwich variance with a single group is degenerate");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.a);
  const auto& sv = svd.singularValues();
  const double cond = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
  if (!(cond <= 1e12)) {
    throw NumericalError("the estimating-equation Jacobian is ill-conditioned (condition number " +
                         std::to_string(cond) + "); more components are needed");
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(out.a);
  const Eigen::MatrixXd ainv_b = qr.solve(out.b);
  Eigen::MatrixXd sigma = qr.solve(ainv_b.transpose()) / static_cast<double>(out.m);
  out.sigma = 0.5 * (sigma + sigma.transpose());
  return out;
}

SandwichResult sandwich(const Network& net, const StudyData& data, const NuisanceFits& fits,
                        std::span<const Allocation> allocs, const Partition& variance_groups) {
  return EstimatingEquations(net, data, fits, allocs, variance_groups).sandwich();
}

double contrast_se(const Eigen::MatrixXd& sigma, Eigen::Index a, Eigen::Index b) {
  if (a < 0 || b < 0 || a >= sigma.rows() || b >= sigma.rows() || sigma.rows() != sigma.cols()) {
    throw InputError("contrast index out of range");
  }
  if (a == b) return 0.0;
  const double v = sigma(a, a) + sigma(b, b) - 2.0 * sigma(a, b);
  if (v < -1e-12) throw NumericalError("contrast variance is negative (" + std::to_string(v) + ")");
  return std::sqrt(std::max(0.0, v));
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& matrix) {
  char buf[40];
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", matrix(r, c));
      if (c > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace netspill
