#pragma once

#include "netspill/estimator.hpp"
#include "netspill/models.hpp"
#include "netspill/netgraph.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace netspill {

/// Stacked parameter vector: propensity parameters (coefficients, then log sd
/// when the fitted sd is positive), censoring parameters (likewise), then the
/// targets (y(0, alpha), y(1, alpha), y(alpha)) for each allocation.
struct ThetaStack {
  Eigen::VectorXd values;
  std::vector<std::string> names;
  Eigen::Index propensity_size = 0;
  Eigen::Index censoring_size = 0;
  bool propensity_log_sd = false;
  bool censoring_log_sd = false;
  std::vector<Allocation> allocs;

  Eigen::Index size() const noexcept { return values.size(); }
  Eigen::Index censoring_offset() const noexcept { return propensity_size; }
  Eigen::Index target_offset() const noexcept { return propensity_size + censoring_size; }
  Eigen::Index target_index(Arm arm, std::size_t alloc_index) const;
  /// Throws InputError for an unknown name.
  Eigen::Index index_of(const std::string& name) const;
};

struct SandwichResult {
  Eigen::MatrixXd a;      // -(1/m) sum of psi Jacobians
  Eigen::MatrixXd b;      // (1/m) sum of psi psi'
  Eigen::MatrixXd sigma;  // A^-1 B A^-T / m
  int m = 0;
  double k_hat = 0.0;
  ThetaStack stack;

  /// Covariance of the target block, ordered like TargetEstimates.
  Eigen::MatrixXd target_covariance() const;
  double se(Eigen::Index index) const;
};

/// Stacked estimating equations over the groups of `variance_groups`
/// (normally the network components). Each group contributes
///   (1/k) sum_j score_j            for the model parameters and
///   (1/k) sum_j term_j - theta     for each target,
/// with k = n / m. Model scores are per-observation shares of the marginal
/// likelihood score (see MixedLogisticLikelihood::observation_scores), so any
/// grouping that refines the fitting groups is allowed. Random-intercept
/// modes of the censoring model are held fixed in the target rows.
///
/// The network, data and fits are referenced, not copied.
class EstimatingEquations {
 public:
  EstimatingEquations(const Network& net, const StudyData& data, const NuisanceFits& fits,
                      std::span<const Allocation> allocs, const Partition& variance_groups);

  const ThetaStack& theta_hat() const noexcept { return stack_; }
  int group_count() const noexcept { return groups_.group_count; }
  double k_hat() const noexcept { return k_hat_; }

  /// Row nu is psi_nu(theta).
  Eigen::MatrixXd component_psi(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd component_psi(int nu, const Eigen::VectorXd& theta) const;

  /// Central differences with step 1e-5 (1 + |theta|). Score blocks are
  /// differenced only in their own parameters, the target block is I.
  Eigen::MatrixXd compute_A() const;
  Eigen::MatrixXd compute_B() const;

  /// Throws NumericalError when A's condition number exceeds 1e12.
  SandwichResult sandwich() const;

 private:
  Eigen::MatrixXd observation_scores(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd propensity_gradient(const Eigen::VectorXd& params) const;
  Eigen::VectorXd censoring_gradient(const Eigen::VectorXd& params) const;
  /// n x 3K matrix of IPCW terms; `density` overrides the propensity densities.
  Eigen::MatrixXd target_terms(const Eigen::VectorXd& theta, const Eigen::VectorXd* density = nullptr) const;

  const Network& net_;
  const StudyData& data_;
  const NuisanceFits& fits_;
  std::vector<Allocation> allocs_;
  Partition groups_;
  double k_hat_ = 0.0;
  ThetaStack stack_;
  MixedLogisticLikelihood propensity_lik_;
  MixedLogisticLikelihood censoring_lik_;
  Eigen::VectorXd censoring_offsets_;
  Eigen::VectorXd density_hat_;  // propensity densities at the fitted parameters
  NodeFactors counts_;
};

/// Point estimates plus sandwich covariance in one call.
SandwichResult sandwich(const Network& net, const StudyData& data, const NuisanceFits& fits,
                        std::span<const Allocation> allocs, const Partition& variance_groups);

/// sqrt(sigma_aa + sigma_bb - 2 sigma_ab). Values in [-1e-12, 0) are floored
/// to 0; anything more negative throws NumericalError.
double contrast_se(const Eigen::MatrixXd& sigma, Eigen::Index a, Eigen::Index b);

/// Row-major text dump, one row per line, entries printed with %.17g.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& matrix);

}  // namespace netspill
