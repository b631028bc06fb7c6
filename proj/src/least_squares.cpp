#include "ionfridge/least_squares.hpp"

#include "ionfridge/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ionfridge::fit {

Eigen::MatrixXd numerical_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper, int* evaluations)
{
    const Eigen::Index n = x.size();
    Eigen::MatrixXd jac;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = 1e-6 * std::max(std::abs(x[i]), 1e-2);
        Eigen::VectorXd xp = x, xm = x;
        double hp = h, hm = h;
        if (x[i] + h > upper[i])
            hp = 0.0;
        if (x[i] - h < lower[i])
            hm = 0.0;
        if (hp == 0.0 && hm == 0.0)
            hp = hm = 0.5 * h; // box narrower than the step; evaluate anyway
        xp[i] += hp;
        xm[i] -= hm;
        const Eigen::VectorXd fp = f(xp);
        const Eigen::VectorXd fm = f(xm);
        if (evaluations)
            *evaluations += 2;
        if (jac.size() == 0)
            jac.resize(fp.size(), n);
        jac.col(i) = (fp - fm) / (hp + hm);
    }
    return jac;
}

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& x0,
                                       const LeastSquaresOptions& options)
{
    const Eigen::Index n = x0.size();
    if (problem.lower.size() != n || problem.upper.size() != n)
        throw ValidationError("levenberg_marquardt: bounds do not match the parameter count");

    LeastSquaresResult res;
    res.x = x0.cwiseMax(problem.lower).cwiseMin(problem.upper);
    Eigen::VectorXd r = problem.residuals(res.x);
    res.evaluations = 1;
    res.chi2 = r.squaredNorm();
    res.chi2_history.push_back(res.chi2);
    if (!std::isfinite(res.chi2))
        throw NumericalError("levenberg_marquardt: non-finite objective at the starting point");

    double lambda = options.initial_lambda;
    Eigen::MatrixXd jac = numerical_jacobian(problem.residuals, res.x, problem.lower, problem.upper, &res.evaluations);
    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;
        if (grad.cwiseAbs().maxCoeff() <= 1e-14 * std::max(res.chi2, 1e-300) || res.chi2 == 0.0) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd scale = jtj.diagonal().cwiseMax(1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-300));
        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * scale;
            const Eigen::VectorXd step = a.ldlt().solve(-grad);
            const Eigen::VectorXd trial = (res.x + step).cwiseMax(problem.lower).cwiseMin(problem.upper);
            const Eigen::VectorXd rt = problem.residuals(trial);
            ++res.evaluations;
            const double chi2_t = rt.squaredNorm();
            if (std::isfinite(chi2_t) && chi2_t < res.chi2) {
                const double drop = res.chi2 - chi2_t;
                const double dx = (trial - res.x).norm();
                res.x = trial;
                r = rt;
                res.chi2 = chi2_t;
                res.chi2_history.push_back(chi2_t);
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (drop <= options.rel_tol * chi2_t || dx <= options.rel_tol * (res.x.norm() + options.rel_tol))
                    res.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No descent direction left at working precision: local minimum.
            res.converged = true;
            break;
        }
        if (res.converged)
            break;
        jac = numerical_jacobian(problem.residuals, res.x, problem.lower, problem.upper, &res.evaluations);
    }

    jac = numerical_jacobian(problem.residuals, res.x, problem.lower, problem.upper, &res.evaluations);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    const double tol = 1e-10 * (sv.size() ? sv.maxCoeff() : 0.0);
    Eigen::VectorXd inv_sq = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > tol)
            inv_sq[i] = 1.0 / (sv[i] * sv[i]);
        else
            res.rank_deficient = true;
    }
    if (jac.rows() < n)
        res.rank_deficient = true;
    res.covariance = svd.matrixV() * inv_sq.asDiagonal() * svd.matrixV().transpose();
    return res;
}

} // namespace ionfridge::fit
