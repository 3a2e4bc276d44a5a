#pragma once

#include "netspill/netgraph.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace netspill {

/// Named model matrix. Entries must be finite; full column rank is checked at fit time.
struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;

  Eigen::Index rows() const noexcept { return values.rows(); }
  Eigen::Index cols() const noexcept { return values.cols(); }

  void validate() const;

  /// Prepends an "(Intercept)" column of ones.
  static DesignMatrix with_intercept(const Eigen::MatrixXd& covariates, const std::vector<std::string>& names);
};

struct LogisticOptions {
  double rel_tol = 1e-10;  // relative log-likelihood change
  int max_iterations = 100;
  double score_tol = 1e-6;
  double separation_bound = 15.0;
};

struct LogisticFit {
  Eigen::VectorXd coefficients;
  bool converged = false;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool separation_warning = false;
  std::vector<double> log_likelihood_trace;  // one entry per IRLS iteration, non-decreasing
};

/// Maximum-likelihood logistic regression by IRLS (Newton) with step halving.
/// Throws InputError for mismatched lengths, non-binary y or a rank-deficient X.
LogisticFit fit_logistic(const DesignMatrix& x, std::span<const int> y, const LogisticOptions& options = {});

struct MixedLogisticOptions {
  int quad_nodes = 21;
  int max_iterations = 200;
  double grad_tol = 1e-8;
  double sd_floor = 1e-4;  // below this the random-intercept sd is reported as 0
  std::vector<double> sd_grid{0.25, 0.5, 1.0, 2.0};
};

/// Random-intercept logistic fit. With re_sd == 0 the fit is the ordinary
/// logistic MLE and carries no log-sd parameter.
struct MixedLogisticFit {
  Eigen::VectorXd fixed_coefficients;
  double re_sd = 0.0;
  std::vector<double> group_modes;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  int quad_nodes = 21;

  bool on_boundary() const noexcept { return re_sd == 0.0; }

  /// (beta, log sd), or beta alone on the boundary.
  Eigen::VectorXd parameters() const;
};

/// Fixed-effects logistic likelihood bound to one dataset.
class LogisticLikelihood {
 public:
  LogisticLikelihood(const DesignMatrix& x, std::span<const int> y);

  double log_likelihood(const Eigen::VectorXd& beta) const;
  /// Row j is x_j (y_j - p_j).
  Eigen::MatrixXd observation_scores(const Eigen::VectorXd& beta) const;

 private:
  Eigen::MatrixXd x_;
  std::vector<int> y_;
};

/// Random-intercept logistic marginal likelihood bound to one dataset and
/// grouping. Parameter vectors are (beta, log sd); a vector of length
/// cols(X) means sd = 0.
class MixedLogisticLikelihood {
 public:
  MixedLogisticLikelihood(const DesignMatrix& x, std::span<const int> y, const Partition& groups, int quad_nodes);

  Eigen::Index fixed_count() const noexcept { return x_.cols(); }

  double log_likelihood(const Eigen::VectorXd& params) const;
  /// Gradient from posterior expectations of the complete-data score at the
  /// quadrature abscissae.
  double log_likelihood(const Eigen::VectorXd& params, Eigen::VectorXd& gradient) const;
  Eigen::VectorXd group_log_likelihoods(const Eigen::VectorXd& params) const;
  std::vector<double> group_modes(const Eigen::VectorXd& params) const;

  /// Per-observation share of the score: row j is the posterior expectation
  /// of x_j (y_j - p_j(b)) under j's group posterior, and the log-sd column
  /// splits the group's log-sd score evenly over its members. Summing rows
  /// within a fitting group gives that group's marginal score.
  Eigen::MatrixXd observation_scores(const Eigen::VectorXd& params) const;

 private:
  double evaluate(const Eigen::VectorXd& params, Eigen::VectorXd* group_values, Eigen::VectorXd* gradient,
                  Eigen::MatrixXd* obs_scores, std::vector<double>* modes) const;

  Eigen::MatrixXd x_;
  std::vector<int> y_;
  std::vector<std::vector<NodeId>> members_;
  int quad_nodes_;
};

/// Maximises the marginal likelihood over (beta, log sd) with BFGS, starting
/// from the logistic coefficients and the best point of a sd grid; the sd = 0
/// boundary is compared explicitly. Throws ConvergenceError (with the last
/// iterate) when the gradient tolerance is not met within max_iterations.
MixedLogisticFit fit_mixed_logistic(const DesignMatrix& x, std::span<const int> y, const Partition& groups,
                                    const MixedLogisticOptions& options = {});

enum class ScoreMethod { Quadrature, FiniteDifference };

/// Group x parameter matrix of score contributions: analytic X'(y - p) per group.
Eigen::MatrixXd per_group_score(const LogisticFit& fit, const DesignMatrix& x, std::span<const int> y,
                                const Partition& groups);

/// Group x parameter matrix of marginal log-likelihood gradients at the fit;
/// `groups` must be the fitting groups. Quadrature takes posterior
/// expectations of the complete-data score; FiniteDifference uses central
/// differences of each group's log-likelihood with step 1e-6 (1 + |theta|).
Eigen::MatrixXd per_group_score(const MixedLogisticFit& fit, const DesignMatrix& x, std::span<const int> y,
                                const Partition& groups, ScoreMethod method = ScoreMethod::Quadrature);

/// Sums observation rows into group rows.
Eigen::MatrixXd aggregate_rows(const Eigen::MatrixXd& rows, const Partition& groups);

/// inv_logit(x . coefficients + group_effect).
double predict_prob(const Eigen::VectorXd& coefficients, const Eigen::Ref<const Eigen::RowVectorXd>& x_row,
                    double group_effect = 0.0);

}  // namespace netspill
