// Damped Gauss-Newton (Levenberg-Marquardt) least squares.
#ifndef ISBPOL_NLLS_HPP
#define ISBPOL_NLLS_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace isbpol {

enum class Termination {
  RelativeCostChange,  ///< accepted step changed the cost by < cost_tolerance
  GradientNorm,        ///< scaled gradient below gradient_tolerance
  MaxIterations,
  Stalled,             ///< damping saturated, no decrease possible in double precision
};

std::string to_string(Termination t);

class NllsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NllsOptions {
  double cost_tolerance = 1e-10;
  double gradient_tolerance = 1e-10;
  int max_iterations = 500;
};

struct NllsProblem {
  /// Residual vector (model - data) for the given parameters.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
  /// Optional analytic Jacobian of the residual; central differences
  /// otherwise.
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

struct NllsResult {
  Eigen::VectorXd parameters;
  Eigen::VectorXd residual;
  double cost = 0.0;  ///< 0.5 * |residual|^2
  int iterations = 0;
  int accepted_steps = 0;
  Termination termination = Termination::MaxIterations;
  /// Cost after the initial evaluation and after every accepted step.
  std::vector<double> cost_history;
  /// s^2 (J^T J)^-1 with s^2 = 2 cost / (m - n); NaN when not estimable.
  Eigen::MatrixXd covariance;
};

/// Throws NllsError for non-finite model values at the start point or
/// normal equations that stay singular under any damping.
NllsResult levenberg_marquardt(const NllsProblem& problem, const Eigen::VectorXd& start,
                               const NllsOptions& options = {});

Eigen::MatrixXd numerical_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x);

}  // namespace isbpol

#endif  // ISBPOL_NLLS_HPP
