#include "netspill/quadrature.hpp"

#include "netspill/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace netspill {

const GaussHermiteRule& GaussHermiteRule::get(int size) {
  if (size < 1) throw InputError("Gauss-Hermite rule: size must be positive");
  static std::mutex lock;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::scoped_lock guard(lock);
  auto& slot = cache[size];
  if (!slot) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(size, size);
    for (int k = 1; k < size; ++k) {
      jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    auto rule = std::make_unique<GaussHermiteRule>();
    const double sqrt_pi = std::sqrt(M_PI);
    for (int k = 0; k < size; ++k) {
      const double v0 = eig.eigenvectors()(0, k);
      rule->nodes.push_back(eig.eigenvalues()(k));
      rule->weights.push_back(sqrt_pi * v0 * v0);
      rule->log_weights.push_back(std::log(sqrt_pi) + 2.0 * std::log(std::abs(v0)));
    }
    slot = std::move(rule);
  }
  return *slot;
}

double inv_logit(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double ex = std::exp(x);
  return ex / (1.0 + ex);
}

double log1p_exp(double x) noexcept { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

namespace {

// Bernoulli log-likelihood at intercept shift b.
double bernoulli_loglik(std::span<const double> eta, std::span<const int> y, double b) {
  double s = 0;
  for (std::size_t j = 0; j < eta.size(); ++j) {
    const double t = eta[j] + b;
    s += y[j] * t - log1p_exp(t);
  }
  return s;
}

}  // namespace

InterceptIntegral integrate_random_intercept(std::span<const double> eta, std::span<const int> y, double sd,
                                             const GaussHermiteRule& rule, InterceptPosterior* posterior) {
  InterceptIntegral out;
  if (sd <= 0.0) {
    out.log_value = bernoulli_loglik(eta, y, 0.0);
    if (posterior) {
      posterior->points.assign(1, 0.0);
      posterior->weights.assign(1, 1.0);
    }
    return out;
  }

  const double prec = 1.0 / (sd * sd);
  const double log_norm = -std::log(sd) - 0.5 * std::log(2.0 * M_PI);
  auto log_joint = [&](double b) { return bernoulli_loglik(eta, y, b) - 0.5 * prec * b * b + log_norm; };

  // Log joint with its first two derivatives in b, in one pass.
  auto evaluate = [&](double b, double& grad, double& curv) {
    double value = -0.5 * prec * b * b + log_norm;
    grad = -prec * b;
    curv = -prec;
    for (std::size_t j = 0; j < eta.size(); ++j) {
      const double t = eta[j] + b;
      const double e = std::exp(-std::abs(t));
      const double p = t >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      value += y[j] * t - std::max(t, 0.0) - std::log1p(e);
      grad += y[j] - p;
      curv -= p * (1.0 - p);
    }
    return value;
  };

  // Newton ascent on the strictly concave log joint, with step halving.
  double b = 0.0;
  double grad = 0.0;
  double curvature = 0.0;
  double current = evaluate(b, grad, curvature);
  for (int it = 0; it < 100; ++it) {
    double step = -grad / curvature;
    if (std::abs(step) < 1e-12 * (1.0 + std::abs(b))) break;
    double trial_grad = 0.0;
    double trial_curv = 0.0;
    double value = evaluate(b + step, trial_grad, trial_curv);
    int halvings = 0;
    while (value < current && halvings < 60) {
      step *= 0.5;
      value = evaluate(b + step, trial_grad, trial_curv);
      ++halvings;
    }
    if (value < current) break;
    b += step;
    current = value;
    grad = trial_grad;
    curvature = trial_curv;
  }
  const double scale = 1.0 / std::sqrt(-curvature);
  out.mode = b;
  out.scale = scale;

  const std::size_t k_count = rule.nodes.size();
  const double spread = std::sqrt(2.0) * scale;
  thread_local std::vector<double> terms;
  thread_local std::vector<double> points;
  terms.resize(k_count);
  points.resize(k_count);
  double peak = -INFINITY;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double x = rule.nodes[k];
    points[k] = b + spread * x;
    terms[k] = rule.log_weights[k] + x * x + log_joint(points[k]);
    peak = std::max(peak, terms[k]);
  }
  double acc = 0;
  for (std::size_t k = 0; k < k_count; ++k) acc += std::exp(terms[k] - peak);
  const double lse = peak + std::log(acc);
  out.log_value = std::log(spread) + lse;
  if (posterior) {
    posterior->points.assign(points.begin(), points.end());
    posterior->weights.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) posterior->weights[k] = std::exp(terms[k] - lse);
  }
  return out;
}

}  // namespace netspill
