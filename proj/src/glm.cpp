#include "netspill/glm.hpp"

#include "netspill/errors.hpp"
#include "netspill/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace netspill {

namespace {

void check_binary_response(const DesignMatrix& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw InputError("design has " + std::to_string(x.rows()) + " rows but response has " +
                     std::to_string(y.size()) + " entries");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw InputError("response entry " + std::to_string(i) + " is not 0/1");
  }
  x.validate();
}

double logistic_loglik(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double s = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += y[i] * eta[i] - log1p_exp(eta[i]);
  return s;
}

struct BfgsOutcome {
  Eigen::VectorXd x;
  double value = 0;  // objective (negative log-likelihood)
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
};

// Forward-difference Hessian of an analytic gradient, symmetrised.
template <class Objective>
Eigen::MatrixXd gradient_jacobian(Objective& objective, const Eigen::VectorXd& x, const Eigen::VectorXd& g0) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd h(p, p);
  Eigen::VectorXd gs(p);
  for (Eigen::Index c = 0; c < p; ++c) {
    const double step = 1e-5 * (1.0 + std::abs(x[c]));
    Eigen::VectorXd xs = x;
    xs[c] += step;
    objective(xs, gs);
    h.col(c) = (gs - g0) / step;
  }
  return 0.5 * (h + h.transpose());
}

template <class Objective>
Eigen::MatrixXd initial_inverse_hessian(Objective& objective, const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  const Eigen::MatrixXd h = gradient_jacobian(objective, x, g);
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() == Eigen::Success && h.allFinite()) {
    return llt.solve(Eigen::MatrixXd::Identity(x.size(), x.size()));
  }
  const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
  return Eigen::MatrixXd::Identity(x.size(), x.size()) / scale;
}

// Quasi-Newton minimisation with Armijo backtracking. `objective(x, g)`
// returns f(x) and writes its gradient.
template <class Objective>
BfgsOutcome minimize_bfgs(Objective& objective, Eigen::VectorXd x, double grad_tol, int max_iterations,
                          double max_component_step) {
  BfgsOutcome out;
  Eigen::VectorXd g(x.size());
  double f = objective(x, g);
  Eigen::MatrixXd hinv = initial_inverse_hessian(objective, x, g);
  bool fresh_curvature = true;
  Eigen::VectorXd gn(x.size());
  int it = 0;
  for (; it < max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd d = -hinv * g;
    double slope = g.dot(d);
    if (!(slope < 0)) {
      hinv = initial_inverse_hessian(objective, x, g);
      d = -hinv * g;
      slope = g.dot(d);
      if (!(slope < 0)) {
        d = -g;
        slope = -g.squaredNorm();
      }
    }
    const double biggest = d.lpNorm<Eigen::Infinity>();
    if (biggest > max_component_step) {
      d *= max_component_step / biggest;
      slope = g.dot(d);
    }
    // Near the optimum the decrease is below round-off; accept steps that do
    // not increase f beyond that level.
    const double slack = 1e-13 * std::max(1.0, std::abs(f));
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd xn;
    double fn = 0;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + t * d;
      fn = objective(xn, gn);
      if (std::isfinite(fn) && gn.allFinite() && fn <= f + 1e-4 * t * slope + slack) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (fresh_curvature) break;
      hinv = initial_inverse_hessian(objective, x, g);
      fresh_curvature = true;
      continue;
    }
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * yv;
      hinv += (rho * rho * yv.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
    fresh_curvature = false;
    x = xn;
    f = fn;
    g = gn;
  }
  if (!out.converged && g.lpNorm<Eigen::Infinity>() <= grad_tol) out.converged = true;
  out.x = std::move(x);
  out.value = f;
  out.gradient = std::move(g);
  out.iterations = it;
  return out;
}

}  // namespace

void DesignMatrix::validate() const {
  if (!column_names.empty() && static_cast<Eigen::Index>(column_names.size()) != values.cols()) {
    throw InputError("design matrix has " + std::to_string(values.cols()) + " columns but " +
                     std::to_string(column_names.size()) + " names");
  }
  if (!values.allFinite()) throw InputError("design matrix has non-finite entries");
}

DesignMatrix DesignMatrix::with_intercept(const Eigen::MatrixXd& covariates, const std::vector<std::string>& names) {
  DesignMatrix d;
  d.values.resize(covariates.rows(), covariates.cols() + 1);
  d.values.col(0).setOnes();
  d.values.rightCols(covariates.cols()) = covariates;
  d.column_names.push_back("(Intercept)");
  for (Eigen::Index c = 0; c < covariates.cols(); ++c) {
    d.column_names.push_back(c < static_cast<Eigen::Index>(names.size()) ? names[c] : "x" + std::to_string(c + 1));
  }
  return d;
}

LogisticFit fit_logistic(const DesignMatrix& x, std::span<const int> y, const LogisticOptions& options) {
  check_binary_response(x, y);
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n == 0 || p == 0) throw InputError("logistic fit needs at least one row and one column");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.values);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw InputError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " < " +
                                      std::to_string(p) + ")");

  const Eigen::MatrixXd& xv = x.values;
  LogisticFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double ll = logistic_loglik(xv, y, beta);
  Eigen::VectorXd prob(n), w(n), score(p);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::VectorXd eta = xv * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = inv_logit(eta[i]);
      w[i] = prob[i] * (1.0 - prob[i]);
    }
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) resid[i] = y[i] - prob[i];
    score = xv.transpose() * resid;
    const Eigen::MatrixXd info = xv.transpose() * w.asDiagonal() * xv;
    const Eigen::VectorXd step = info.ldlt().solve(score);

    double t = 1.0;
    Eigen::VectorXd trial = beta + step;
    double ll_trial = logistic_loglik(xv, y, trial);
    int halvings = 0;
    while (!(ll_trial >= ll) && halvings < 40) {
      t *= 0.5;
      trial = beta + t * step;
      ll_trial = logistic_loglik(xv, y, trial);
      ++halvings;
    }
    fit.iterations = it;
    if (!(ll_trial >= ll)) {
      fit.log_likelihood_trace.push_back(ll);
      break;
    }
    const double change = std::abs(ll_trial - ll) / (std::abs(ll) + 1e-12);
    beta = trial;
    ll = ll_trial;
    fit.log_likelihood_trace.push_back(ll);
    if (change < options.rel_tol) break;
  }

  // Final score at the returned coefficients.
  {
    const Eigen::VectorXd eta = xv * beta;
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) resid[i] = y[i] - inv_logit(eta[i]);
    score = xv.transpose() * resid;
  }
  fit.coefficients = beta;
  fit.log_likelihood = ll;
  fit.converged = score.lpNorm<Eigen::Infinity>() <= options.score_tol;
  fit.separation_warning = beta.lpNorm<Eigen::Infinity>() > options.separation_bound;
  return fit;
}

Eigen::VectorXd MixedLogisticFit::parameters() const {
  const Eigen::Index p = fixed_coefficients.size();
  Eigen::VectorXd theta(on_boundary() ? p : p + 1);
  theta.head(p) = fixed_coefficients;
  if (!on_boundary()) theta[p] = std::log(re_sd);
  return theta;
}

LogisticLikelihood::LogisticLikelihood(const DesignMatrix& x, std::span<const int> y)
    : x_(x.values), y_(y.begin(), y.end()) {
  check_binary_response(x, y);
}

double LogisticLikelihood::log_likelihood(const Eigen::VectorXd& beta) const { return logistic_loglik(x_, y_, beta); }

Eigen::MatrixXd LogisticLikelihood::observation_scores(const Eigen::VectorXd& beta) const {
  const Eigen::VectorXd eta = x_ * beta;
  Eigen::MatrixXd out(x_.rows(), x_.cols());
  for (Eigen::Index i = 0; i < x_.rows(); ++i) out.row(i) = x_.row(i) * (y_[i] - inv_logit(eta[i]));
  return out;
}

MixedLogisticLikelihood::MixedLogisticLikelihood(const DesignMatrix& x, std::span<const int> y,
                                                 const Partition& groups, int quad_nodes)
    : x_(x.values), y_(y.begin(), y.end()), members_(groups.members()), quad_nodes_(quad_nodes) {
  check_binary_response(x, y);
  if (groups.size() != y.size()) throw InputError("grouping length does not match the response");
  if (quad_nodes < 1) throw InputError("quadrature node count must be positive");
  for (const auto& g : members_) {
    if (g.empty()) throw InputError("every group must be nonempty");
  }
}

namespace {

struct GroupBuffers {
  std::vector<double> eta;
  std::vector<int> y;
  InterceptPosterior posterior;
};

double unpack_sd(const Eigen::VectorXd& params, Eigen::Index p) {
  if (params.size() == p) return 0.0;
  if (params.size() != p + 1) throw InputError("mixed-model parameter vector has the wrong length");
  return std::exp(params[p]);
}

}  // namespace

double MixedLogisticLikelihood::evaluate(const Eigen::VectorXd& params, Eigen::VectorXd* group_values,
                                         Eigen::VectorXd* gradient, Eigen::MatrixXd* obs_scores,
                                         std::vector<double>* modes) const {
  const Eigen::Index p = x_.cols();
  const double sd = unpack_sd(params, p);
  const Eigen::Index width = params.size();
  const Eigen::VectorXd eta = x_ * params.head(p);
  const auto& rule = GaussHermiteRule::get(quad_nodes_);
  const bool want_posterior = gradient != nullptr || obs_scores != nullptr;
  if (group_values) group_values->resize(static_cast<Eigen::Index>(members_.size()));
  if (gradient) gradient->setZero(width);
  if (obs_scores) obs_scores->setZero(x_.rows(), width);
  if (modes) modes->assign(members_.size(), 0.0);

  GroupBuffers buf;
  double total = 0;
  for (std::size_t g = 0; g < members_.size(); ++g) {
    const auto& group = members_[g];
    buf.eta.clear();
    buf.y.clear();
    for (NodeId j : group) {
      buf.eta.push_back(eta[j]);
      buf.y.push_back(y_[j]);
    }
    const InterceptIntegral integral =
        integrate_random_intercept(buf.eta, buf.y, sd, rule, want_posterior ? &buf.posterior : nullptr);
    total += integral.log_value;
    if (group_values) (*group_values)[static_cast<Eigen::Index>(g)] = integral.log_value;
    if (modes) (*modes)[g] = integral.mode;
    if (!want_posterior) continue;

    const auto& pts = buf.posterior.points;
    const auto& wts = buf.posterior.weights;
    double sd_score = 0;
    if (sd > 0) {
      for (std::size_t k = 0; k < pts.size(); ++k) sd_score += wts[k] * (pts[k] * pts[k] / (sd * sd) - 1.0);
    }
    const double sd_share = sd_score / static_cast<double>(group.size());
    for (std::size_t m = 0; m < group.size(); ++m) {
      double resid = 0;
      for (std::size_t k = 0; k < pts.size(); ++k) resid += wts[k] * (buf.y[m] - inv_logit(buf.eta[m] + pts[k]));
      const NodeId j = group[m];
      if (gradient) gradient->head(p) += resid * x_.row(j).transpose();
      if (obs_scores) {
        obs_scores->row(j).head(p) = resid * x_.row(j);
        if (width > p) (*obs_scores)(j, p) = sd_share;
      }
    }
    if (gradient && width > p) (*gradient)[p] += sd_score;
  }
  return total;
}

double MixedLogisticLikelihood::log_likelihood(const Eigen::VectorXd& params) const {
  return evaluate(params, nullptr, nullptr, nullptr, nullptr);
}

double MixedLogisticLikelihood::log_likelihood(const Eigen::VectorXd& params, Eigen::VectorXd& gradient) const {
  return evaluate(params, nullptr, &gradient, nullptr, nullptr);
}

Eigen::VectorXd MixedLogisticLikelihood::group_log_likelihoods(const Eigen::VectorXd& params) const {
  Eigen::VectorXd out;
  evaluate(params, &out, nullptr, nullptr, nullptr);
  return out;
}

std::vector<double> MixedLogisticLikelihood::group_modes(const Eigen::VectorXd& params) const {
  std::vector<double> out;
  evaluate(params, nullptr, nullptr, nullptr, &out);
  return out;
}

Eigen::MatrixXd MixedLogisticLikelihood::observation_scores(const Eigen::VectorXd& params) const {
  Eigen::MatrixXd out;
  evaluate(params, nullptr, nullptr, &out, nullptr);
  return out;
}

MixedLogisticFit fit_mixed_logistic(const DesignMatrix& x, std::span<const int> y, const Partition& groups,
                                    const MixedLogisticOptions& options) {
  check_binary_response(x, y);
  if (options.sd_grid.empty()) throw InputError("sd grid must not be empty");
  const LogisticFit base = fit_logistic(x, y);
  const MixedLogisticLikelihood lik(x, y, groups, options.quad_nodes);
  const Eigen::Index p = x.cols();

  MixedLogisticFit fit;
  fit.quad_nodes = options.quad_nodes;
  auto use_boundary = [&](int iterations) {
    fit.fixed_coefficients = base.coefficients;
    fit.re_sd = 0.0;
    fit.group_modes.assign(static_cast<std::size_t>(groups.group_count), 0.0);
    fit.log_likelihood = base.log_likelihood;
    fit.converged = base.converged;
    fit.iterations = iterations;
    return fit;
  };

  Eigen::VectorXd start(p + 1);
  start.head(p) = base.coefficients;
  double best = -std::numeric_limits<double>::infinity();
  for (double sd : options.sd_grid) {
    if (!(sd > 0)) throw InputError("sd grid entries must be positive");
    Eigen::VectorXd trial = start;
    trial[p] = std::log(sd);
    const double ll = lik.log_likelihood(trial);
    if (ll > best) {
      best = ll;
      start[p] = trial[p];
    }
  }
  if (!(best > base.log_likelihood)) return use_boundary(0);

  // Negative log-likelihood; log sd is kept in a range where the quadrature
  // is meaningful and the line search backs off outside it.
  const double log_sd_low = std::log(options.sd_floor) - 20.0;
  const double log_sd_high = std::log(1e3);
  auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& g) {
    if (!(theta[p] > log_sd_low && theta[p] < log_sd_high)) {
      g.setConstant(theta.size(), std::numeric_limits<double>::quiet_NaN());
      return std::numeric_limits<double>::infinity();
    }
    const double ll = lik.log_likelihood(theta, g);
    g = -g;
    return -ll;
  };
  const BfgsOutcome res = minimize_bfgs(objective, start, options.grad_tol, options.max_iterations, 2.0);
  const double sd = std::exp(res.x[p]);
  const double ll = -res.value;
  if (sd < options.sd_floor || ll <= base.log_likelihood + 1e-8) return use_boundary(res.iterations);
  if (!res.converged) {
    throw ConvergenceError("mixed logistic fit did not reach gradient tolerance within " +
                               std::to_string(options.max_iterations) + " iterations",
                           std::vector<double>(res.x.data(), res.x.data() + res.x.size()));
  }
  fit.fixed_coefficients = res.x.head(p);
  fit.re_sd = sd;
  fit.group_modes = lik.group_modes(res.x);
  fit.log_likelihood = ll;
  fit.converged = true;
  fit.iterations = res.iterations;
  return fit;
}

Eigen::MatrixXd aggregate_rows(const Eigen::MatrixXd& rows, const Partition& groups) {
  if (static_cast<std::size_t>(rows.rows()) != groups.size()) {
    throw InputError("row count does not match the partition");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(groups.group_count, rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.row(groups.labels[static_cast<std::size_t>(i)]) += rows.row(i);
  return out;
}

Eigen::MatrixXd per_group_score(const LogisticFit& fit, const DesignMatrix& x, std::span<const int> y,
                                const Partition& groups) {
  const LogisticLikelihood lik(x, y);
  return aggregate_rows(lik.observation_scores(fit.coefficients), groups);
}

Eigen::MatrixXd per_group_score(const MixedLogisticFit& fit, const DesignMatrix& x, std::span<const int> y,
                                const Partition& groups, ScoreMethod method) {
  const MixedLogisticLikelihood lik(x, y, groups, fit.quad_nodes);
  const Eigen::VectorXd theta = fit.parameters();
  if (method == ScoreMethod::Quadrature) return aggregate_rows(lik.observation_scores(theta), groups);

  Eigen::MatrixXd out(groups.group_count, theta.size());
  for (Eigen::Index c = 0; c < theta.size(); ++c) {
    const double step = 1e-6 * (1.0 + std::abs(theta[c]));
    Eigen::VectorXd up = theta;
    Eigen::VectorXd down = theta;
    up[c] += step;
    down[c] -= step;
    out.col(c) = (lik.group_log_likelihoods(up) - lik.group_log_likelihoods(down)) / (2.0 * step);
  }
  return out;
}

double predict_prob(const Eigen::VectorXd& coefficients, const Eigen::Ref<const Eigen::RowVectorXd>& x_row,
                    double group_effect) {
  if (x_row.size() != coefficients.size()) throw InputError("covariate row length does not match coefficients");
  return inv_logit(x_row.dot(coefficients.transpose()) + group_effect);
}

}  // namespace netspill
