#pragma once

// Test-only reference computations that share no code with the library.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <vector>

namespace testsupport {

// S(r) = exp((r/2)(a^2 - a^dag^2)) on a dim-level ladder, via the matrix exponential.
inline Eigen::MatrixXd squeeze_matrix(double r, int dim)
{
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n)
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const Eigen::MatrixXd a2 = a * a;
    const Eigen::MatrixXd gen = 0.5 * r * (a2 - a2.transpose());
    return gen.exp();
}

// |<n|S(r)|m>|^2 for n < keep.
inline std::vector<double> squeezed_number_column(int m, double r, int keep, int dim = 200)
{
    const Eigen::MatrixXd s = squeeze_matrix(r, dim);
    std::vector<double> out(static_cast<std::size_t>(keep));
    for (int n = 0; n < keep; ++n)
        out[static_cast<std::size_t>(n)] = s(n, m) * s(n, m);
    return out;
}

// diag(S rho_th S^dag) for n < keep.
inline std::vector<double> squeezed_thermal_diag(double nbar, double r, int keep, int dim = 400)
{
    const Eigen::MatrixXd s = squeeze_matrix(r, dim);
    Eigen::VectorXd th(dim);
    const double x = nbar / (nbar + 1.0);
    double z = 0.0;
    for (int m = 0; m < dim; ++m) {
        th[m] = std::pow(x, m) / (nbar + 1.0);
        z += th[m];
    }
    th /= z;
    std::vector<double> out(static_cast<std::size_t>(keep), 0.0);
    for (int n = 0; n < keep; ++n)
        for (int m = 0; m < dim; ++m)
            out[static_cast<std::size_t>(n)] += th[m] * s(n, m) * s(n, m);
    return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b, std::size_t n)
{
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < a.size() ? a[i] : 0.0;
        const double y = i < b.size() ? b[i] : 0.0;
        d = std::max(d, std::abs(x - y));
    }
    return d;
}

} // namespace testsupport
