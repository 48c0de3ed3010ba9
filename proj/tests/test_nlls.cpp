#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "isbpol/nlls.hpp"

using namespace isbpol;

namespace {

NllsProblem rosenbrock() {
  NllsProblem p;
  p.residual = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r << 10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0);
    return r;
  };
  return p;
}

}  // namespace

TEST_CASE("linear least squares is solved by the first accepted step") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(30, 4, [&] { return n(rng); });
  const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(30, [&] { return n(rng); });
  NllsProblem p;
  p.residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x - b; };
  p.jacobian = [&](const Eigen::VectorXd&) -> Eigen::MatrixXd { return A; };
  const auto r = levenberg_marquardt(p, Eigen::VectorXd::Constant(4, 3.0));
  const Eigen::VectorXd oracle = A.colPivHouseholderQr().solve(b);
  CHECK((r.parameters - oracle).norm() < 1e-10);
  CHECK(r.accepted_steps == 1);
  REQUIRE(r.cost_history.size() == 2);
  CHECK(r.cost_history[1] == doctest::Approx(0.5 * (A * oracle - b).squaredNorm()).epsilon(1e-12));

  // covariance: s^2 (A^T A)^-1
  const double s2 = (A * oracle - b).squaredNorm() / (30 - 4);
  const Eigen::MatrixXd cov = s2 * (A.transpose() * A).inverse();
  CHECK((r.covariance - cov).norm() < 1e-10 * cov.norm());
}

TEST_CASE("Rosenbrock converges with monotone cost") {
  const auto r = levenberg_marquardt(rosenbrock(), Eigen::Vector2d(-1.2, 1.0));
  CHECK(std::abs(r.parameters(0) - 1.0) < 1e-6);
  CHECK(std::abs(r.parameters(1) - 1.0) < 1e-6);
  for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
  CHECK(r.termination != Termination::MaxIterations);
  CHECK(r.accepted_steps + 1 == static_cast<int>(r.cost_history.size()));
  // square system: covariance not estimable
  CHECK(std::isnan(r.covariance(0, 0)));
}

TEST_CASE("monotone descent on random curve fits") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = u(rng), k = u(rng);
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(40, 0.0, 3.0);
    Eigen::VectorXd y = (a * (-k * t.array()).exp()).matrix();
    NllsProblem p;
    p.residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return (x(0) * (-x(1) * t.array()).exp()).matrix() - y;
    };
    const auto r = levenberg_marquardt(p, Eigen::Vector2d(3.0 * u(rng), 3.0 * u(rng)));
    for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
    CHECK(std::abs(r.parameters(0) - a) < 1e-6);
    CHECK(std::abs(r.parameters(1) - k) < 1e-6);
  }
}

TEST_CASE("termination reasons") {
  NllsOptions one;
  one.max_iterations = 1;
  CHECK(levenberg_marquardt(rosenbrock(), Eigen::Vector2d(-1.2, 1.0), one).termination == Termination::MaxIterations);

  NllsProblem exact;
  exact.residual = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
  const auto r = levenberg_marquardt(exact, Eigen::Vector2d(0.0, 0.0));
  CHECK(r.termination == Termination::GradientNorm);
  CHECK(r.iterations == 0);

  CHECK(to_string(Termination::RelativeCostChange) == "relative_cost_change");
  CHECK(to_string(Termination::Stalled) == "stalled");
}

TEST_CASE("nlls errors") {
  NllsProblem nan;
  nan.residual = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(3, std::sqrt(x(0) - 10.0));
  };
  CHECK_THROWS_AS(levenberg_marquardt(nan, Eigen::VectorXd::Zero(1)), NllsError);

  NllsProblem short_residual;
  short_residual.residual = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x.head(1); };
  CHECK_THROWS_AS(levenberg_marquardt(short_residual, Eigen::VectorXd::Ones(2)), NllsError);

  NllsProblem unused;
  unused.residual = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd r(3);
    r << x(0) - 1.0, x(0) + 1.0, 2.0 * x(0);
    return r;
  };
  try {
    levenberg_marquardt(unused, Eigen::Vector2d(0.3, 0.0));
    FAIL("expected NllsError");
  } catch (const NllsError& e) {
    CHECK(std::string(e.what()).find("parameter 1") != std::string::npos);
  }
}

TEST_CASE("numerical Jacobian") {
  auto f = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd r(3);
    r << std::sin(x(0)) * x(1), std::exp(0.3 * x(1)), x(0) * x(0) - x(1);
    return r;
  };
  const Eigen::Vector2d x(0.7, -1.3);
  Eigen::MatrixXd analytic(3, 2);
  analytic << std::cos(x(0)) * x(1), std::sin(x(0)), 0.0, 0.3 * std::exp(0.3 * x(1)), 2.0 * x(0), -1.0;
  CHECK((numerical_jacobian(f, x) - analytic).cwiseAbs().maxCoeff() < 1e-8);
}
