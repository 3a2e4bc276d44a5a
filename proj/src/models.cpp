#include "netspill/models.hpp"

#include "netspill/errors.hpp"

#include <string>

namespace netspill {

std::string to_string(CensoringFitKind kind) { return kind == CensoringFitKind::Logistic ? "logistic" : "mixed"; }

std::string to_string(CensoringCovariates covariates) {
  switch (covariates) {
    case CensoringCovariates::CovariatesOnly:
      return "covariates";
    case CensoringCovariates::Own:
      return "own";
    case CensoringCovariates::Full:
      return "full";
  }
  return "own";
}

CensoringFitKind parse_censoring_fit(const std::string& text) {
  if (text == "logistic") return CensoringFitKind::Logistic;
  if (text == "mixed") return CensoringFitKind::Mixed;
  throw InputError("unknown censoring model '" + text + "' (expected logistic or mixed)");
}

CensoringCovariates parse_censoring_covariates(const std::string& text) {
  if (text == "covariates") return CensoringCovariates::CovariatesOnly;
  if (text == "own") return CensoringCovariates::Own;
  if (text == "full") return CensoringCovariates::Full;
  throw InputError("unknown censoring covariate set '" + text + "' (expected covariates, own or full)");
}

namespace {

std::vector<std::string> covariate_labels(const StudyData& data) {
  std::vector<std::string> names = data.covariate_names;
  for (auto c = static_cast<Eigen::Index>(names.size()); c < data.covariates.cols(); ++c) {
    names.push_back("Z" + std::to_string(c + 1));
  }
  return names;
}

void check_sizes(const Network& net, const StudyData& data) {
  data.validate();
  if (data.size() != net.node_count()) {
    throw InputError("study data has " + std::to_string(data.size()) + " rows but the network has " +
                     std::to_string(net.node_count()) + " nodes");
  }
}

}  // namespace

DesignMatrix propensity_design(const StudyData& data) {
  return DesignMatrix::with_intercept(data.covariates, covariate_labels(data));
}

DesignMatrix censoring_design(const Network& net, const StudyData& data, CensoringCovariates covariates) {
  check_sizes(net, data);
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index q = data.covariates.cols();
  std::vector<std::string> names = covariate_labels(data);
  Eigen::MatrixXd cols = data.covariates;
  if (covariates != CensoringCovariates::CovariatesOnly) {
    cols.conservativeResize(n, cols.cols() + 1);
    for (Eigen::Index i = 0; i < n; ++i) cols(i, cols.cols() - 1) = data.exposure[static_cast<std::size_t>(i)];
    names.push_back("A");
  }
  if (covariates == CensoringCovariates::Full) {
    const Eigen::Index base = cols.cols();
    cols.conservativeResize(n, base + q + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto nbrs = net.neighbors(static_cast<NodeId>(i));
      Eigen::RowVectorXd z_sum = Eigen::RowVectorXd::Zero(q);
      double a_sum = 0;
      for (NodeId j : nbrs) {
        z_sum += data.covariates.row(j);
        a_sum += data.exposure[static_cast<std::size_t>(j)];
      }
      const double d = nbrs.empty() ? 1.0 : static_cast<double>(nbrs.size());
      cols.block(i, base, 1, q) = z_sum / d;
      cols(i, base + q) = a_sum / d;
    }
    for (Eigen::Index c = 0; c < q; ++c) names.push_back("mean_nbr_" + names[static_cast<std::size_t>(c)]);
    names.push_back("mean_nbr_A");
  }
  return DesignMatrix::with_intercept(cols, names);
}

const Eigen::VectorXd& CensoringModel::coefficients() const {
  return kind == CensoringFitKind::Logistic ? logistic.coefficients : mixed.fixed_coefficients;
}

double CensoringModel::re_sd() const { return kind == CensoringFitKind::Logistic ? 0.0 : mixed.re_sd; }

bool CensoringModel::converged() const {
  return kind == CensoringFitKind::Logistic ? logistic.converged : mixed.converged;
}

double CensoringModel::log_likelihood() const {
  return kind == CensoringFitKind::Logistic ? logistic.log_likelihood : mixed.log_likelihood;
}

Eigen::VectorXd CensoringModel::parameters() const {
  return kind == CensoringFitKind::Logistic ? logistic.coefficients : mixed.parameters();
}

Eigen::VectorXd CensoringModel::node_offsets() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups.size()));
  if (kind == CensoringFitKind::Mixed) {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = mixed.group_modes[static_cast<std::size_t>(groups.labels[i])];
    }
  }
  return out;
}

PropensityModel fit_propensity_model(const Network& net, const StudyData& data, const ModelOptions& options) {
  check_sizes(net, data);
  PropensityModel model;
  model.design = propensity_design(data);
  model.groups = options.propensity_groups.value_or(net.components());
  if (model.groups.size() != data.size()) throw InputError("propensity grouping does not match the data");
  MixedLogisticOptions mixed = options.mixed;
  mixed.quad_nodes = options.quad_nodes;
  model.fit = fit_mixed_logistic(model.design, data.exposure, model.groups, mixed);
  model.quad_nodes = options.quad_nodes;
  return model;
}

CensoringModel fit_censoring_model(const Network& net, const StudyData& data, const ModelOptions& options) {
  check_sizes(net, data);
  CensoringModel model;
  model.kind = options.censoring_fit;
  model.design = censoring_design(net, data, options.censoring_covariates);
  model.groups = options.censoring_groups.value_or(net.components());
  if (model.groups.size() != data.size()) throw InputError("censoring grouping does not match the data");
  if (model.kind == CensoringFitKind::Logistic) {
    model.logistic = fit_logistic(model.design, data.censored, options.logistic);
  } else {
    MixedLogisticOptions mixed = options.mixed;
    mixed.quad_nodes = options.quad_nodes;
    model.mixed = fit_mixed_logistic(model.design, data.censored, model.groups, mixed);
  }
  return model;
}

NuisanceFits fit_nuisance_models(const Network& net, const StudyData& data, const ModelOptions& options) {
  return NuisanceFits{fit_propensity_model(net, data, options), fit_censoring_model(net, data, options)};
}

Eigen::VectorXd censoring_survivals(const DesignMatrix& design, const Eigen::VectorXd& coefficients,
                                    const Eigen::VectorXd& offsets) {
  const Eigen::VectorXd eta = design.values * coefficients + offsets;
  Eigen::VectorXd out(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) out[i] = survival_from_predictor(eta[i]);
  return out;
}

NodeFactors node_factors(const Network& net, const StudyData& data, const NuisanceFits& fits) {
  check_sizes(net, data);
  NodeFactors out = neighborhood_counts(net, data.exposure);
  const auto& prop = fits.propensity;
  out.density = propensity_densities(net, data.exposure, prop.design, prop.fit.fixed_coefficients, prop.fit.re_sd,
                                     prop.quad_nodes);
  const auto& cens = fits.censoring;
  out.survival = censoring_survivals(cens.design, cens.coefficients(), cens.node_offsets());
  return out;
}

WeightReport weight_diagnostics(const Network& net, const StudyData& data, const NuisanceFits& fits,
                                double threshold) {
  const NodeFactors factors = node_factors(net, data, fits);
  return weight_diagnostics(std::span<const double>(factors.density.data(), factors.density.size()),
                            std::span<const double>(factors.survival.data(), factors.survival.size()),
                            data.censored, threshold);
}

}  // namespace netspill
