#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace ionfridge::fit {

// Weighted residual vector r(x) = (model(x) - y) / sigma; the solver minimizes
// chi^2 = |r|^2 inside the box [lower, upper].
struct LeastSquaresProblem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct LeastSquaresOptions {
    int max_iterations = 500;
    double rel_tol = 1e-10;
    double initial_lambda = 1e-3;
};

struct LeastSquaresResult {
    Eigen::VectorXd x;
    Eigen::MatrixXd covariance; // (J^T J)^+ at the solution, unscaled
    double chi2 = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    bool rank_deficient = false;
    std::vector<double> chi2_history; // chi^2 after each accepted step, starting at x0
};

// Damped least squares with a central-difference Jacobian. A trial step is
// accepted only when it lowers chi^2, so chi2_history is non-increasing.
LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                       const LeastSquaresOptions& options = {});

// Central-difference Jacobian of f at x, stepping one-sided at active bounds.
Eigen::MatrixXd numerical_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper, int* evaluations = nullptr);

} // namespace ionfridge::fit
