#include "isbpol/nlls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace isbpol {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::RelativeCostChange: return "relative_cost_change";
    case Termination::GradientNorm: return "gradient_norm";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::Stalled: return "stalled";
  }
  return "unknown";
}

Eigen::MatrixXd numerical_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 6e-6 * std::max(std::abs(x(j)), 1e-3);
    xp(j) = x(j) + h;
    const Eigen::VectorXd fp = f(xp);
    xp(j) = x(j) - h;
    const Eigen::VectorXd fm = f(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

NllsResult levenberg_marquardt(const NllsProblem& problem, const Eigen::VectorXd& start,
                               const NllsOptions& options) {
  const auto jacobian = [&](const Eigen::VectorXd& x) {
    return problem.jacobian ? problem.jacobian(x) : numerical_jacobian(problem.residual, x);
  };

  NllsResult out;
  Eigen::VectorXd x = start;
  Eigen::VectorXd r = problem.residual(x);
  if (!r.allFinite()) throw NllsError("model is not finite at the start point");
  if (r.size() < x.size()) throw NllsError("fewer residuals than parameters");
  double cost = 0.5 * r.squaredNorm();
  out.cost_history.push_back(cost);

  // The first trial is an undamped Gauss-Newton step; damping switches on at
  // the first rejection.
  double lambda = 0.0;
  double nu = 2.0;
  bool stale = true;
  Eigen::MatrixXd jac;
  Eigen::MatrixXd normal;
  Eigen::VectorXd grad;

  for (;;) {
    if (stale) {
      jac = jacobian(x);
      if (!jac.allFinite()) throw NllsError("non-finite Jacobian");
      normal = jac.transpose() * jac;
      grad = jac.transpose() * r;
      stale = false;
      for (Eigen::Index j = 0; j < normal.rows(); ++j)
        if (!(normal(j, j) > 0.0))
          throw NllsError("singular normal equations: parameter " + std::to_string(j) +
                          " does not influence the residual");
      const double rnorm = r.norm();
      double scaled = 0.0;
      if (rnorm > 0.0)
        for (Eigen::Index j = 0; j < grad.size(); ++j)
          scaled = std::max(scaled, std::abs(grad(j)) / (std::sqrt(normal(j, j)) * rnorm));
      if (rnorm == 0.0 || scaled < options.gradient_tolerance) {
        out.termination = Termination::GradientNorm;
        break;
      }
    }
    if (out.iterations >= options.max_iterations) {
      out.termination = Termination::MaxIterations;
      break;
    }
    ++out.iterations;

    Eigen::MatrixXd damped = normal;
    damped.diagonal() += lambda * normal.diagonal();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
    Eigen::VectorXd step;
    bool usable = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (usable) {
      step = ldlt.solve(-grad);
      usable = step.allFinite();
    }
    double trial_cost = std::numeric_limits<double>::infinity();
    Eigen::VectorXd trial_r;
    if (usable) {
      trial_r = problem.residual(x + step);
      if (trial_r.allFinite()) trial_cost = 0.5 * trial_r.squaredNorm();
    }

    if (trial_cost < cost) {
      const double predicted =
          0.5 * step.dot(lambda * normal.diagonal().cwiseProduct(step) - grad);
      const double rho = predicted > 0.0 ? (cost - trial_cost) / predicted : 1.0;
      const double relative = (cost - trial_cost) / cost;
      x += step;
      r = std::move(trial_r);
      cost = trial_cost;
      out.cost_history.push_back(cost);
      ++out.accepted_steps;
      stale = true;
      if (lambda > 0.0) lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      if (relative < options.cost_tolerance) {
        out.termination = Termination::RelativeCostChange;
        break;
      }
    } else {
      lambda = lambda == 0.0 ? 1e-3 : lambda * nu;
      nu *= 2.0;
      if (lambda > 1e16) {
        out.termination = Termination::Stalled;
        break;
      }
    }
  }

  if (stale) {
    jac = jacobian(x);
    normal = jac.transpose() * jac;
  }
  out.parameters = x;
  out.residual = r;
  out.cost = cost;
  const auto m = r.size();
  const auto n = x.size();
  out.covariance = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  if (m > n) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const double s2 = 2.0 * cost / static_cast<double>(m - n);
      out.covariance = s2 * ldlt.solve(Eigen::MatrixXd::Identity(n, n));
    }
  }
  return out;
}

}  // namespace isbpol
