#include "ionfridge/dynamics.hpp"

#include "ionfridge/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fmt/format.h>
#include <limits>

namespace ionfridge::dynamics {

using cplx = std::complex<double>;

const std::vector<double>& Marginals::mode(char which) const
{
    switch (which) {
    case 'h': return h;
    case 'w': return w;
    case 'c': return c;
    default: throw ValidationError(fmt::format("unknown mode '{}' (expected h, w or c)", which));
    }
}

SectorHamiltonian build_sector_hamiltonian(const fock::SectorBasis& basis, double xi, double detuning)
{
    SectorHamiltonian h;
    h.basis = basis;
    const int d = basis.dim;
    h.diag = Eigen::VectorXd::Zero(d);
    h.offdiag = Eigen::VectorXd::Zero(std::max(d - 1, 0));
    const int N = basis.label.N;
    const int M = basis.label.M;
    for (int k = 0; k < d; ++k) {
        const int n = basis.nh_min + k;
        h.diag[k] = detuning * n;
        if (k + 1 < d)
            h.offdiag[k] = xi * std::sqrt(double(n + 1) * double(N - n) * double(M - n));
    }
    return h;
}

SectorHamiltonian build_sector_hamiltonian(fock::SectorLabel label, double xi, double detuning)
{
    return build_sector_hamiltonian(fock::enumerate_sector(label), xi, detuning);
}

SectorSpectrum diagonalize(const SectorHamiltonian& h)
{
    SectorSpectrum s;
    const Eigen::Index d = h.diag.size();
    if (d == 0)
        return s;
    if (d == 1) {
        s.energies = h.diag;
        s.vectors = Eigen::MatrixXd::Identity(1, 1);
        s.min_gap = std::numeric_limits<double>::infinity();
        return s;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(h.diag, h.offdiag, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw NumericalError(fmt::format("tridiagonal eigensolver failed on sector ({}, {})",
                                         h.basis.label.N, h.basis.label.M));
    s.energies = solver.eigenvalues();
    s.vectors = solver.eigenvectors();
    s.min_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 1; i < d; ++i)
        s.min_gap = std::min(s.min_gap, s.energies[i] - s.energies[i - 1]);
    return s;
}

namespace {

SectorSpectrum sector_spectrum(const SectorState& s, double xi, double detuning)
{
    return diagonalize(build_sector_hamiltonian(s.basis, xi, detuning));
}

// Group labels: consecutive (sorted) energies closer than tol share a group.
std::vector<int> degenerate_groups(const Eigen::VectorXd& energies, double tol)
{
    std::vector<int> g(static_cast<std::size_t>(energies.size()), 0);
    for (Eigen::Index i = 1; i < energies.size(); ++i)
        g[i] = (energies[i] - energies[i - 1] <= tol) ? g[i - 1] : g[i - 1] + 1;
    return g;
}

double degeneracy_tolerance(const Eigen::VectorXd& energies, double xi, double detuning)
{
    double scale = std::abs(xi) + std::abs(detuning);
    if (energies.size() > 0)
        scale = std::max(scale, energies.cwiseAbs().maxCoeff());
    return 1e-12 * scale;
}

// Applies f(i, j) to every element of rho in the eigenbasis of the sector.
template <typename Factor>
ThreeModeEnsemble transform_in_eigenbasis(const ThreeModeEnsemble& in, Factor factor)
{
    ThreeModeEnsemble out = in;
    for (auto& s : out.sectors) {
        if (s.basis.dim <= 1)
            continue;
        const SectorSpectrum spec = sector_spectrum(s, in.xi, in.detuning);
        const Eigen::MatrixXcd u = spec.vectors.cast<cplx>();
        Eigen::MatrixXcd r = u.adjoint() * s.rho * u;
        const double tol = degeneracy_tolerance(spec.energies, in.xi, in.detuning);
        const std::vector<int> groups = degenerate_groups(spec.energies, tol);
        for (Eigen::Index i = 0; i < r.rows(); ++i)
            for (Eigen::Index j = 0; j < r.cols(); ++j)
                r(i, j) *= factor(spec.energies[i], spec.energies[j], groups[i] == groups[j]);
        s.rho = u * r * u.adjoint();
    }
    return out;
}

} // namespace

double ThreeModeEnsemble::retained_weight() const
{
    double w = 0.0;
    for (const auto& s : sectors)
        w += s.weight;
    return w;
}

void ThreeModeEnsemble::validate(double trace_tol) const
{
    const double total = retained_weight() + discarded_weight;
    if (std::abs(total - 1.0) > 1e-9)
        throw NumericalError(fmt::format("ensemble weights sum to {:.12g}", total));
    for (const auto& s : sectors) {
        const auto tag = fmt::format("sector ({}, {})", s.basis.label.N, s.basis.label.M);
        if (s.rho.rows() != s.basis.dim || s.rho.cols() != s.basis.dim)
            throw NumericalError(tag + ": density matrix shape mismatch");
        const cplx tr = s.rho.trace();
        if (std::abs(tr.real() - 1.0) > trace_tol || std::abs(tr.imag()) > trace_tol)
            throw NumericalError(fmt::format("{}: trace {:.12g}", tag, tr.real()));
        if ((s.rho - s.rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
            throw NumericalError(tag + ": density matrix not Hermitian");
        if (s.basis.dim > 1) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s.rho, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-10)
                throw NumericalError(tag + ": density matrix not positive");
        }
    }
}

ThreeModeEnsemble assemble_from_distributions(const states::PhononDistribution& p_h,
                                              const states::PhononDistribution& p_w,
                                              const states::PhononDistribution& p_c,
                                              const fock::TruncationPolicy& policy, double xi, double detuning)
{
    const fock::SectorSelection sel = fock::select_sectors(p_h.p, p_w.p, p_c.p, policy);
    const fock::ModeCaps caps = policy.caps();
    ThreeModeEnsemble e;
    e.xi = xi;
    e.detuning = detuning;
    e.discarded_weight = sel.discarded_weight;
    e.sectors.reserve(sel.sectors.size());
    for (const auto& ws : sel.sectors) {
        SectorState s;
        s.basis = fock::enumerate_sector(ws.label, caps);
        s.weight = ws.weight;
        Eigen::VectorXd pops(s.basis.dim);
        for (int i = 0; i < s.basis.dim; ++i) {
            const fock::FockState f = s.basis.state(i);
            pops[i] = p_h[f.n_h] * p_w[f.n_w] * p_c[f.n_c];
        }
        const double sum = pops.sum();
        if (!(sum > 0.0))
            throw NumericalError(fmt::format("sector ({}, {}) selected with zero population",
                                             ws.label.N, ws.label.M));
        s.rho = (pops / sum).asDiagonal().toDenseMatrix().cast<cplx>();
        e.sectors.push_back(std::move(s));
    }
    return e;
}

ThreeModeEnsemble assemble_initial(const ModePreps& preps, const fock::TruncationPolicy& policy, double xi,
                                   double detuning, int cutoff)
{
    policy.validate();
    // Without caps the cutoff only sets numerical accuracy, so heavy tails
    // (strong squeezing) get a larger one instead of an error.
    auto dist = [&](const states::ModePrep& prep) {
        if (policy.caps().any())
            return states::prep_to_distribution(prep, cutoff);
        int c = cutoff;
        for (;;) {
            auto d = states::prep_to_distribution(prep, c);
            if (c >= max_auto_cutoff || d.tail_mass <= 1e-6 * policy.epsilon) {
                states::check_cutoff(d, policy.epsilon);
                return d;
            }
            c = std::min(2 * c, max_auto_cutoff);
        }
    };
    const auto p_h = dist(preps.h);
    const auto p_w = dist(preps.w);
    const auto p_c = dist(preps.c);
    return assemble_from_distributions(p_h, p_w, p_c, policy, xi, detuning);
}

ModeMeans mean_phonons(const ThreeModeEnsemble& ensemble)
{
    ModeMeans m;
    double wsum = 0.0;
    for (const auto& s : ensemble.sectors) {
        double nh = 0.0;
        for (int i = 0; i < s.basis.dim; ++i)
            nh += s.rho(i, i).real() * (s.basis.nh_min + i);
        m.h += s.weight * nh;
        m.w += s.weight * (s.basis.label.N - nh);
        m.c += s.weight * (s.basis.label.M - nh);
        wsum += s.weight;
    }
    if (wsum > 0.0) {
        m.h /= wsum;
        m.w /= wsum;
        m.c /= wsum;
    }
    return m;
}

Marginals marginals(const ThreeModeEnsemble& ensemble)
{
    int nh = 0, nw = 0, nc = 0;
    for (const auto& s : ensemble.sectors) {
        if (s.basis.dim == 0)
            continue;
        nh = std::max(nh, s.basis.nh_min + s.basis.dim - 1);
        nw = std::max(nw, s.basis.label.N - s.basis.nh_min);
        nc = std::max(nc, s.basis.label.M - s.basis.nh_min);
    }
    Marginals out;
    out.h.assign(nh + 1, 0.0);
    out.w.assign(nw + 1, 0.0);
    out.c.assign(nc + 1, 0.0);
    const double wsum = ensemble.retained_weight();
    for (const auto& s : ensemble.sectors)
        for (int i = 0; i < s.basis.dim; ++i) {
            const fock::FockState f = s.basis.state(i);
            const double p = s.weight * s.rho(i, i).real() / wsum;
            out.h[f.n_h] += p;
            out.w[f.n_w] += p;
            out.c[f.n_c] += p;
        }
    return out;
}

ThreeModeEnsemble evolve(const ThreeModeEnsemble& ensemble, double t)
{
    if (!(t >= 0.0))
        throw ValidationError(fmt::format("evolve: t = {} must be >= 0", t));
    return transform_in_eigenbasis(ensemble, [t](double ei, double ej, bool) {
        return std::exp(cplx(0.0, -(ei - ej) * t));
    });
}

ThreeModeEnsemble long_time_average(const ThreeModeEnsemble& ensemble)
{
    return transform_in_eigenbasis(ensemble, [](double, double, bool same) {
        return same ? cplx(1.0) : cplx(0.0);
    });
}

ThreeModeEnsemble incoherent_evolve(const ThreeModeEnsemble& ensemble, const IncoherentConfig& cfg)
{
    if (!(cfg.xi_in >= 0.0))
        throw ValidationError("incoherent_evolve: xi_in must be >= 0");
    if (!(cfg.t >= 0.0))
        throw ValidationError("incoherent_evolve: t must be >= 0");
    if (std::isinf(cfg.t) && cfg.xi_in > 0.0)
        return long_time_average(ensemble);
    return transform_in_eigenbasis(ensemble, [&cfg](double ei, double ej, bool same) {
        if (same)
            return cplx(1.0);
        const double dw = ei - ej;
        return cplx(std::exp(-cfg.xi_in * dw * dw * cfg.t));
    });
}

double default_incoherent_strength(const ThreeModeEnsemble& ensemble)
{
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& s : ensemble.sectors)
        if (s.basis.dim > 1)
            gap = std::min(gap, sector_spectrum(s, ensemble.xi, ensemble.detuning).min_gap);
    if (!std::isfinite(gap) || !(gap > 0.0) || !(ensemble.xi > 0.0))
        return 0.0;
    return ensemble.xi / (5.0 * gap * gap);
}

// ---------------------------------------------------------------------------

SpectralPropagator::SpectralPropagator(const ThreeModeEnsemble& ensemble) : ensemble_(ensemble)
{
    smallest_gap_ = std::numeric_limits<double>::infinity();
    blocks_.reserve(ensemble_.sectors.size());
    for (const auto& s : ensemble_.sectors) {
        Block b;
        b.weight = s.weight;
        b.N = s.basis.label.N;
        b.M = s.basis.label.M;
        b.nh_min = s.basis.nh_min;
        const int d = s.basis.dim;
        if (d > 0) {
            max_n_h_ = std::max(max_n_h_, b.nh_min + d - 1);
            max_n_w_ = std::max(max_n_w_, b.N - b.nh_min);
            max_n_c_ = std::max(max_n_c_, b.M - b.nh_min);
        }
        const SectorSpectrum spec = sector_spectrum(s, ensemble_.xi, ensemble_.detuning);
        smallest_gap_ = std::min(smallest_gap_, spec.min_gap);
        b.energies = spec.energies;
        b.vectors = spec.vectors;
        const Eigen::MatrixXcd u = spec.vectors.cast<cplx>();
        b.rho_eig = u.adjoint() * s.rho * u;

        Eigen::VectorXd nvals(d);
        for (int i = 0; i < d; ++i)
            nvals[i] = b.nh_min + i;
        const Eigen::MatrixXd a = spec.vectors.transpose() * nvals.asDiagonal() * spec.vectors;
        const double tol = degeneracy_tolerance(spec.energies, ensemble_.xi, ensemble_.detuning);
        b.groups = degenerate_groups(spec.energies, tol);
        const std::vector<int>& groups = b.groups;

        for (int i = 0; i < d; ++i) {
            b.diag_nh += a(i, i) * b.rho_eig(i, i).real();
            b.dephased_nh += a(i, i) * b.rho_eig(i, i).real();
        }
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                const cplx coeff = a(i, j) * b.rho_eig(i, j);
                if (groups[i] == groups[j])
                    b.dephased_nh += 2.0 * coeff.real();
                if (coeff == cplx(0.0))
                    continue;
                b.pair_i.push_back(i);
                b.pair_j.push_back(j);
                b.pair_omega.push_back(b.energies[i] - b.energies[j]);
                b.pair_coeff.push_back(coeff);
            }
        blocks_.push_back(std::move(b));
    }
}

ModeMeans SpectralPropagator::combine(const std::vector<double>& nh_per_block) const
{
    ModeMeans m;
    double wsum = 0.0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        const Block& b = blocks_[k];
        const double nh = nh_per_block[k];
        m.h += b.weight * nh;
        m.w += b.weight * (b.N - nh);
        m.c += b.weight * (b.M - nh);
        wsum += b.weight;
    }
    if (wsum > 0.0) {
        m.h /= wsum;
        m.w /= wsum;
        m.c /= wsum;
    }
    return m;
}

ModeMeans SpectralPropagator::means_at(double t) const
{
    std::vector<double> nh(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        const Block& b = blocks_[k];
        double acc = 0.0;
        // <n_h> = sum_i A_ii r_ii + 2 Re sum_{i<j} A_ij r_ij exp(-i w_ij t)
        for (std::size_t p = 0; p < b.pair_coeff.size(); ++p) {
            const double ph = b.pair_omega[p] * t;
            acc += b.pair_coeff[p].real() * std::cos(ph) + b.pair_coeff[p].imag() * std::sin(ph);
        }
        nh[k] = b.diag_nh + 2.0 * acc;
    }
    return combine(nh);
}

ModeMeans SpectralPropagator::long_time_means() const
{
    std::vector<double> nh(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k)
        nh[k] = blocks_[k].dephased_nh;
    return combine(nh);
}

ModeMeans SpectralPropagator::incoherent_means_at(double xi_in, double t) const
{
    if (!(xi_in >= 0.0) || !(t >= 0.0))
        throw ValidationError("incoherent_means_at: xi_in and t must be >= 0");
    std::vector<double> nh(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        const Block& b = blocks_[k];
        double acc = 0.0;
        for (std::size_t p = 0; p < b.pair_coeff.size(); ++p) {
            const double dw = b.pair_omega[p];
            acc += b.pair_coeff[p].real() * std::exp(-xi_in * dw * dw * t);
        }
        // Degenerate pairs carry dw = 0 and never decay, matching the dephased limit.
        nh[k] = b.diag_nh + 2.0 * acc;
    }
    return combine(nh);
}

template <typename PhaseFn>
Marginals SpectralPropagator::marginals_with(PhaseFn phase) const
{
    Marginals out;
    out.h.assign(max_n_h_ + 1, 0.0);
    out.w.assign(max_n_w_ + 1, 0.0);
    out.c.assign(max_n_c_ + 1, 0.0);
    double wsum = 0.0;
    for (const Block& b : blocks_)
        wsum += b.weight;
    for (const Block& b : blocks_) {
        const Eigen::Index d = b.energies.size();
        if (d == 0)
            continue;
        Eigen::MatrixXcd r = b.rho_eig;
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                r(i, j) *= phase(b, i, j);
        // diag(U r U^T)
        const Eigen::MatrixXcd ur = b.vectors.cast<cplx>() * r;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double pk = (ur.row(k).transpose().cwiseProduct(b.vectors.row(k).transpose().cast<cplx>())).sum().real();
            const double p = b.weight * pk / wsum;
            const int n_h = b.nh_min + static_cast<int>(k);
            out.h[n_h] += p;
            out.w[b.N - n_h] += p;
            out.c[b.M - n_h] += p;
        }
    }
    return out;
}

Marginals SpectralPropagator::marginals_at(double t) const
{
    return marginals_with([t](const Block& b, Eigen::Index i, Eigen::Index j) {
        return std::exp(cplx(0.0, -(b.energies[i] - b.energies[j]) * t));
    });
}

Marginals SpectralPropagator::long_time_marginals() const
{
    return marginals_with([](const Block& b, Eigen::Index i, Eigen::Index j) {
        return b.groups[i] == b.groups[j] ? cplx(1.0) : cplx(0.0);
    });
}

std::vector<ModeMeans> SpectralPropagator::trajectory(std::span<const double> times) const
{
    std::vector<ModeMeans> out;
    out.reserve(times.size());
    for (double t : times)
        out.push_back(means_at(t));
    return out;
}

} // namespace ionfridge::dynamics
