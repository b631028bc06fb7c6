#include "ionfridge/dense_oracle.hpp"

#include "ionfridge/errors.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <fmt/format.h>

namespace ionfridge::dynamics {

using cplx = std::complex<double>;

namespace {

Eigen::MatrixXd annihilation(int dim)
{
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n)
        a(n - 1, n) = std::sqrt(double(n));
    return a;
}

void check_cap(int cap, char mode)
{
    if (cap < 0 || cap > max_dense_cap)
        throw ValidationError(fmt::format("dense oracle: cap {} for mode {} outside [0, {}]", cap, mode, max_dense_cap));
}

// Working dimension for building a squeezed state before truncating to cap.
int squeeze_work_dim(const states::ModePrep& prep, int cap)
{
    const double mean = prep.mean();
    return std::max(cap + 1, static_cast<int>(40.0 * (mean + 1.0)) + 160);
}

} // namespace

Eigen::MatrixXcd squeeze_operator(double r, double theta, int dim)
{
    if (dim <= 0)
        throw ValidationError("squeeze_operator: dim must be positive");
    const Eigen::MatrixXcd a = annihilation(dim).cast<cplx>();
    const cplx z = std::polar(r, theta);
    const Eigen::MatrixXcd a2 = a * a;
    // Generator G is anti-Hermitian; i G is Hermitian.
    const Eigen::MatrixXcd g = 0.5 * (std::conj(z) * a2 - z * a2.adjoint());
    const Eigen::MatrixXcd herm = cplx(0.0, 1.0) * g;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (herm + herm.adjoint()));
    if (es.info() != Eigen::Success)
        throw NumericalError("squeeze_operator: eigensolver failed");
    // exp(G) = exp(-i (iG)) = W exp(-i lambda) W^dag
    Eigen::VectorXcd phase(dim);
    for (int k = 0; k < dim; ++k)
        phase[k] = std::exp(cplx(0.0, -es.eigenvalues()[k]));
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd single_mode_density(const states::ModePrep& prep, int cap)
{
    prep.validate();
    if (cap < 0)
        throw ValidationError("single_mode_density: cap must be >= 0");
    const int dim = cap + 1;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    switch (prep.kind) {
    case states::PrepKind::thermal: {
        const double x = prep.nbar / (prep.nbar + 1.0);
        for (int n = 0; n < dim; ++n)
            rho(n, n) = std::pow(x, n) / (prep.nbar + 1.0);
        break;
    }
    case states::PrepKind::fock:
        if (prep.n_fock > cap)
            throw ValidationError(fmt::format("single_mode_density: Fock state {} above cap {}", prep.n_fock, cap));
        rho(prep.n_fock, prep.n_fock) = 1.0;
        break;
    case states::PrepKind::coherent: {
        const double alpha = std::sqrt(prep.alpha_sq);
        Eigen::VectorXcd psi(dim);
        for (int n = 0; n < dim; ++n)
            psi[n] = std::exp(-0.5 * prep.alpha_sq + n * std::log(alpha > 0.0 ? alpha : 1.0) -
                              0.5 * std::lgamma(n + 1.0)) * (alpha > 0.0 || n == 0 ? 1.0 : 0.0);
        rho = psi * psi.adjoint();
        break;
    }
    case states::PrepKind::squeezed_thermal: {
        const int work = squeeze_work_dim(prep, cap);
        Eigen::VectorXd th(work);
        const double x = prep.nbar / (prep.nbar + 1.0);
        for (int n = 0; n < work; ++n)
            th[n] = (prep.nbar == 0.0) ? (n == 0 ? 1.0 : 0.0) : std::pow(x, n) / (prep.nbar + 1.0);
        const Eigen::MatrixXcd s = squeeze_operator(prep.r, prep.theta, work);
        const Eigen::MatrixXcd full = s * th.cast<cplx>().asDiagonal() * s.adjoint();
        rho = full.topLeftCorner(dim, dim);
        break;
    }
    }
    const cplx tr = rho.trace();
    if (!(tr.real() > 0.0))
        throw NumericalError("single_mode_density: no mass below cap");
    rho /= tr.real();
    return 0.5 * (rho + rho.adjoint());
}

std::vector<ModeMeans> dense_oracle_evolve(const ModePreps& preps, double xi, std::span<const double> times,
                                           DenseCaps caps, double detuning)
{
    check_cap(caps.h, 'h');
    check_cap(caps.w, 'w');
    check_cap(caps.c, 'c');
    const int dh = caps.h + 1, dw = caps.w + 1, dc = caps.c + 1;

    const Eigen::MatrixXd ah = annihilation(dh), aw = annihilation(dw), ac = annihilation(dc);
    const Eigen::MatrixXd ih = Eigen::MatrixXd::Identity(dh, dh);
    const Eigen::MatrixXd iw = Eigen::MatrixXd::Identity(dw, dw);
    const Eigen::MatrixXd ic = Eigen::MatrixXd::Identity(dc, dc);

    const Eigen::MatrixXd raise_h = Eigen::kroneckerProduct(ah.transpose(), Eigen::kroneckerProduct(aw, ac)).eval();
    Eigen::MatrixXd ham = xi * (raise_h + raise_h.transpose());
    const Eigen::MatrixXd num_h = Eigen::kroneckerProduct(ah.transpose() * ah, Eigen::kroneckerProduct(iw, ic)).eval();
    const Eigen::MatrixXd num_w = Eigen::kroneckerProduct(ih, Eigen::kroneckerProduct(aw.transpose() * aw, ic)).eval();
    const Eigen::MatrixXd num_c = Eigen::kroneckerProduct(ih, Eigen::kroneckerProduct(iw, ac.transpose() * ac)).eval();
    ham += detuning * num_h;

    const Eigen::MatrixXcd rho0 = Eigen::kroneckerProduct(
        single_mode_density(preps.h, caps.h),
        Eigen::kroneckerProduct(single_mode_density(preps.w, caps.w), single_mode_density(preps.c, caps.c)).eval());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ham);
    if (es.info() != Eigen::Success)
        throw NumericalError("dense oracle: eigensolver failed");
    // Everything in the eigenbasis: rho_kl(t) = rho_kl(0) exp(-i (E_k - E_l) t) and
    // <N> = sum_kl (U^T N U)_lk rho_kl(t), so each time costs O(dim^2).
    const Eigen::MatrixXd& u = es.eigenvectors();
    const Eigen::MatrixXcd rho_eig = u.transpose().cast<cplx>() * rho0 * u.cast<cplx>();
    const Eigen::MatrixXd op_h = u.transpose() * num_h.diagonal().asDiagonal() * u;
    const Eigen::MatrixXd op_w = u.transpose() * num_w.diagonal().asDiagonal() * u;
    const Eigen::MatrixXd op_c = u.transpose() * num_c.diagonal().asDiagonal() * u;
    const Eigen::VectorXd& e = es.eigenvalues();

    std::vector<ModeMeans> out;
    out.reserve(times.size());
    const Eigen::Index dim = ham.rows();
    for (double t : times) {
        Eigen::VectorXcd phase(dim);
        for (Eigen::Index k = 0; k < dim; ++k)
            phase[k] = std::exp(cplx(0.0, -e[k] * t));
        double mh = 0.0, mw = 0.0, mc = 0.0;
        for (Eigen::Index l = 0; l < dim; ++l)
            for (Eigen::Index k = 0; k < dim; ++k) {
                const double r = (rho_eig(k, l) * phase[k] * std::conj(phase[l])).real();
                mh += op_h(l, k) * r;
                mw += op_w(l, k) * r;
                mc += op_c(l, k) * r;
            }
        out.push_back({mh, mw, mc});
    }
    return out;
}

fock::TruncationPolicy oracle_matching_policy(DenseCaps caps)
{
    fock::TruncationPolicy p;
    p.epsilon = 1e-12;
    p.n_max_h = caps.h;
    p.n_max_w = caps.w;
    p.n_max_c = caps.c;
    p.renormalize_within_caps = true;
    return p;
}

} // namespace ionfridge::dynamics
