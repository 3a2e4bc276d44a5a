#pragma once

#include "netspill/glm.hpp"
#include "netspill/netgraph.hpp"
#include "netspill/quadrature.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace netspill {

/// Counterfactual exposure probability, strictly inside (0, 1).
class Allocation {
 public:
  explicit Allocation(double alpha);
  double value() const noexcept { return alpha_; }
  friend bool operator==(const Allocation&, const Allocation&) = default;

 private:
  double alpha_;
};

/// alpha^s (1 - alpha)^(d - s): probability of one specific neighbour
/// exposure vector with s of d neighbours exposed.
double pi_neighbors(int s, int d, Allocation alloc);

/// pi_neighbors times alpha^a (1 - alpha)^(1 - a).
double pi_joint(int a, int s, int d, Allocation alloc);

/// Log density of the observed exposures on N_i* = N_i + {i}: the product of
/// p_j^A_j (1 - p_j)^(1 - A_j), p_j = inv_logit(eta_j + b), integrated over a
/// single N(0, sd^2) intercept b shared by the neighbourhood.
double log_neighborhood_density(const Network& net, NodeId i, std::span<const int> exposure,
                                std::span<const double> eta, double sd, const GaussHermiteRule& rule);

/// Propensity density of node i's neighbourhood exposure pattern under the
/// fitted propensity model; `design` holds one row per node.
/// Throws PositivityError when the density is at or below 1e-300.
double propensity_density(const Network& net, NodeId i, std::span<const int> exposure, const DesignMatrix& design,
                          const MixedLogisticFit& fit, int quad_nodes = 21);

/// Densities for every node at explicit parameters (coefficients, sd).
Eigen::VectorXd propensity_densities(const Network& net, std::span<const int> exposure, const DesignMatrix& design,
                                     const Eigen::VectorXd& coefficients, double sd, int quad_nodes = 21);

/// 1 - inv_logit(linear predictor), computed without cancellation.
double survival_from_predictor(double eta) noexcept;

double censoring_survival(const LogisticFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& x_row);
double censoring_survival(const MixedLogisticFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& x_row,
                          std::optional<double> component_mode);

/// The factors of every node's weight: propensity density f, censoring
/// survival s, degree and number of exposed neighbours.
struct NodeFactors {
  Eigen::VectorXd density;
  Eigen::VectorXd survival;
  std::vector<int> degree;
  std::vector<int> treated_neighbors;
};

/// Degrees and exposed-neighbour counts; density and survival left empty.
NodeFactors neighborhood_counts(const Network& net, std::span<const int> exposure);

/// Per-node weight diagnostics. weight is 1 / (f s) and absent for censored nodes.
struct WeightReport {
  std::vector<double> density;
  std::vector<double> survival;
  std::vector<std::optional<double>> weight;
  std::vector<bool> flagged;
  double threshold = 50.0;
  double min_weight = 0.0;
  double max_weight = 0.0;
  double cv = 0.0;  // coefficient of variation of the present weights
  std::size_t flagged_count = 0;
};

/// Never truncates; flags weights above `threshold`.
WeightReport weight_diagnostics(std::span<const double> density, std::span<const double> survival,
                                std::span<const int> censored, double threshold = 50.0);

}  // namespace netspill
