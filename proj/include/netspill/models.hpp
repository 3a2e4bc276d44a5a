#pragma once

#include "netspill/glm.hpp"
#include "netspill/netgraph.hpp"
#include "netspill/study_data.hpp"
#include "netspill/weights.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace netspill {

enum class CensoringFitKind { Logistic, Mixed };

/// Columns of the censoring design (an intercept is always included).
enum class CensoringCovariates {
  CovariatesOnly,  // Z
  Own,             // Z, A
  Full,            // Z, A, neighbour means of Z and A
};

std::string to_string(CensoringFitKind kind);
std::string to_string(CensoringCovariates covariates);
CensoringFitKind parse_censoring_fit(const std::string& text);
CensoringCovariates parse_censoring_covariates(const std::string& text);

struct ModelOptions {
  CensoringFitKind censoring_fit = CensoringFitKind::Logistic;
  CensoringCovariates censoring_covariates = CensoringCovariates::Own;
  int quad_nodes = 21;
  std::optional<Partition> propensity_groups;  // default: network components
  std::optional<Partition> censoring_groups;   // default: network components
  LogisticOptions logistic;
  MixedLogisticOptions mixed;
};

/// Intercept plus the covariates Z.
DesignMatrix propensity_design(const StudyData& data);
DesignMatrix censoring_design(const Network& net, const StudyData& data, CensoringCovariates covariates);

/// Random-intercept logistic model for the exposure.
struct PropensityModel {
  DesignMatrix design;
  Partition groups;
  MixedLogisticFit fit;
  int quad_nodes = 21;
};

/// Logistic or random-intercept logistic model for the censoring indicator.
struct CensoringModel {
  CensoringFitKind kind = CensoringFitKind::Logistic;
  DesignMatrix design;
  Partition groups;
  LogisticFit logistic;    // used when kind == Logistic
  MixedLogisticFit mixed;  // used when kind == Mixed

  const Eigen::VectorXd& coefficients() const;
  double re_sd() const;
  bool converged() const;
  double log_likelihood() const;
  bool has_log_sd() const { return kind == CensoringFitKind::Mixed && !mixed.on_boundary(); }
  /// Coefficients, followed by log sd for an interior mixed fit.
  Eigen::VectorXd parameters() const;
  /// Posterior mode of each node's group intercept (zero for the logistic fit).
  Eigen::VectorXd node_offsets() const;
};

struct NuisanceFits {
  PropensityModel propensity;
  CensoringModel censoring;
};

PropensityModel fit_propensity_model(const Network& net, const StudyData& data, const ModelOptions& options = {});
CensoringModel fit_censoring_model(const Network& net, const StudyData& data, const ModelOptions& options = {});
NuisanceFits fit_nuisance_models(const Network& net, const StudyData& data, const ModelOptions& options = {});

/// Survival probabilities 1 - inv_logit(x xi + offset) for every node.
Eigen::VectorXd censoring_survivals(const DesignMatrix& design, const Eigen::VectorXd& coefficients,
                                    const Eigen::VectorXd& offsets);

/// f, s, degrees and exposed-neighbour counts at the fitted models.
/// Throws PositivityError naming the first node whose density underflows.
NodeFactors node_factors(const Network& net, const StudyData& data, const NuisanceFits& fits);

WeightReport weight_diagnostics(const Network& net, const StudyData& data, const NuisanceFits& fits,
                                double threshold = 50.0);

}  // namespace netspill
