#pragma once

#include <span>
#include <vector>

namespace netspill {

/// Gauss-Hermite rule for the weight exp(-x^2): the integral of
/// exp(-x^2) f(x) is approximated by sum_k weights[k] * f(nodes[k]).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> log_weights;

  /// Golub-Welsch construction; rules are cached per size and shared.
  static const GaussHermiteRule& get(int size);
};

/// Numerically stable logistic helpers.
double inv_logit(double x) noexcept;
double log1p_exp(double x) noexcept;

/// Posterior summary of the random intercept at the quadrature abscissae.
struct InterceptPosterior {
  std::vector<double> points;   // b_k
  std::vector<double> weights;  // normalised posterior weights, sum to 1
};

/// Result of integrating a Bernoulli likelihood over a Gaussian random intercept.
struct InterceptIntegral {
  double log_value = 0.0;  // log of the integral
  double mode = 0.0;       // posterior mode of b
  double scale = 0.0;      // posterior curvature scale at the mode
};

/// log of  integral prod_j p_j(b)^{y_j} (1 - p_j(b))^{1 - y_j} N(b; 0, sd^2) db
/// with p_j(b) = inv_logit(eta_j + b), by adaptive Gauss-Hermite quadrature
/// centred at the posterior mode and scaled by the curvature there.
/// sd == 0 gives the plain product (and a point-mass posterior at 0).
/// When `posterior` is non-null the abscissae and normalised weights are
/// written to it for computing posterior expectations.
InterceptIntegral integrate_random_intercept(std::span<const double> eta, std::span<const int> y, double sd,
                                             const GaussHermiteRule& rule, InterceptPosterior* posterior = nullptr);

}  // namespace netspill
