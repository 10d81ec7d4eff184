#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ckn/errors.hpp"
#include "ckn/profiles.hpp"

namespace ckn {

/// Singular Sturm-Liouville problem of one angular mode:
/// -(P eta')' + Q eta = mu W eta on (0, inf), with eta'(0) = 0 for k = 0 and
/// eta(0) = 0 for k >= 1, plus decay at infinity.
struct ModeProblem {
    DerivedParams d;
    int k = 0;

    double P(double t) const { return std::pow(t, d.K - 1.0); }
    double Q(double t) const {
        return d.tau * d.tau * double(k) * double(k) * std::pow(t, d.K - 3.0);
    }
    double W(double t) const {
        const double u = 1.0 + t * t;
        return d.K * (d.K - 2.0) * std::pow(t, d.K - 1.0) / (u * u);
    }

    /// Effective angular degree: tau^2 k^2 = l (l + K - 2).
    double effective_degree() const {
        const double half = 0.5 * (d.K - 2.0);
        return -half + std::sqrt(half * half + d.tau * d.tau * double(k) * double(k));
    }

    /// Decay exponent of eigenfunctions at infinity.
    double decay_exponent() const {
        if (k == 0) return d.K - 2.0;
        const double half = 0.5 * (d.K - 2.0);
        return half + std::sqrt(half * half + d.tau * d.tau * double(k) * double(k));
    }
};

struct GridSpec {
    double t_min = 1e-8;
    int n0 = 4096;          // initial interval count
    int n_max = 1 << 19;    // refinement cap
    double conv_rel = 1e-7; // doubling tolerance per eigenvalue

    static GridSpec quick() { return {1e-6, 1024, 1 << 14, 1e-5}; }
};

struct ModeSpectrum {
    int k = 0;
    std::vector<double> eigenvalues;           // increasing, Richardson-extrapolated
    std::vector<RadialProfile> eigenfunctions; // W-orthonormal grid profiles
    double disc_error = 0.0;                   // eigenvalue error estimate
};

struct SpectrumSummary {
    double mu1 = 0, mu2 = 0, mu3 = 0;
    int mu3_mode = 0;   // angular mode attaining mu3
    int kernel_dim = 0; // eigenvalues at q-1, counted with multiplicity
};

namespace detail {

// The mode problem in Liouville normal form.  With s = ln t and
// psi = e^{(K-2)s/2} eta the Rayleigh quotient becomes
//
//   [ int psi'^2 + c0 psi^2 ds ] / [ int w(s) psi^2 ds ],
//   c0 = ((K-2)/2)^2 + tau^2 k^2,   w(s) = K(K-2) / (4 cosh^2 s),
//
// with Dirichlet decay at both ends for every mode (the k = 0 Neumann
// condition at t = 0 maps to exponential decay of psi).  All coefficients
// stay O(1)-scaled regardless of K, which keeps the finite-difference
// constants and the floating-point range under control.
struct TridiagPencil {
    std::vector<double> c, e;    // standard-form tridiagonal (after B^{-1/2})
    std::vector<double> bdiag;   // lumped mass diagonal
    std::vector<double> s_nodes; // s coordinate per degree of freedom
};

inline TridiagPencil assemble_pencil(const DerivedParams& d, int k, double s_min,
                                     double s_max, int n) {
    const double K = d.K;
    const double h = (s_max - s_min) / n;
    const double beta = 0.5 * (K - 2.0);
    const double c0 = beta * beta + d.tau * d.tau * double(k) * double(k);
    const int ndof = n - 1; // nodes 1..n-1; both endpoints Dirichlet

    TridiagPencil out;
    out.bdiag.resize(ndof);
    out.s_nodes.resize(ndof);
    out.c.resize(ndof);
    out.e.assign(ndof - 1, 0.0);
    std::vector<double> adiag(ndof, 2.0 / h), aoff(ndof - 1, -1.0 / h);
    for (int i = 0; i < ndof; ++i) {
        const double s = s_min + h * (i + 1);
        const double ch = std::cosh(s);
        out.s_nodes[std::size_t(i)] = s;
        out.bdiag[std::size_t(i)] = h * K * (K - 2.0) / (4.0 * ch * ch);
        adiag[std::size_t(i)] += h * c0;
    }
    for (int i = 0; i < ndof; ++i)
        out.c[std::size_t(i)] = adiag[std::size_t(i)] / out.bdiag[std::size_t(i)];
    for (int i = 0; i + 1 < ndof; ++i)
        out.e[std::size_t(i)] =
            aoff[std::size_t(i)] / (std::sqrt(out.bdiag[std::size_t(i)]) *
                                    std::sqrt(out.bdiag[std::size_t(i + 1)]));
    return out;
}

/// Number of eigenvalues of the standard-form tridiagonal below x
/// (Sturm sequence sign count with guarded pivots).
inline int sturm_count_below(const std::vector<double>& c, const std::vector<double>& e,
                             double x, double pivmin) {
    int count = 0;
    double piv = c[0] - x;
    for (std::size_t i = 0;;) {
        if (std::fabs(piv) < pivmin) piv = -pivmin;
        if (piv < 0.0) ++count;
        if (++i >= c.size()) break;
        piv = (c[i] - x) - e[i - 1] * e[i - 1] / piv;
    }
    return count;
}

inline std::vector<double> bisect_lowest(const TridiagPencil& T, int count) {
    double emax = 0.0;
    for (double v : T.e) emax = std::max(emax, std::fabs(v));
    const double pivmin = std::max(1e-300, 2.3e-308 * emax * emax);

    // Localize an upper bound by exponential search (the pencil is positive
    // definite, so 0 is a lower bound for everything).
    double hi = 4.0;
    double gersh = T.c[0];
    for (std::size_t i = 0; i < T.c.size(); ++i) {
        double r = T.c[i];
        if (i > 0) r += std::fabs(T.e[i - 1]);
        if (i + 1 < T.c.size()) r += std::fabs(T.e[i]);
        gersh = std::max(gersh, r);
    }
    while (hi < gersh && sturm_count_below(T.c, T.e, hi, pivmin) < count) hi *= 4.0;
    hi = std::min(hi, gersh + 1.0);

    std::vector<double> out(static_cast<std::size_t>(count), 0.0);
    for (int j = 1; j <= count; ++j) {
        double lo = 0.0, up = hi;
        for (int iter = 0; iter < 140 && up - lo > 1e-13 * std::max(1.0, std::fabs(up));
             ++iter) {
            const double mid = 0.5 * (lo + up);
            (sturm_count_below(T.c, T.e, mid, pivmin) >= j ? up : lo) = mid;
        }
        out[std::size_t(j - 1)] = 0.5 * (lo + up);
    }
    return out;
}

/// Tridiagonal LU with partial pivoting (gttrf/gttrs style), used by the
/// inverse iteration.
struct TriLU {
    std::vector<double> dl, dd, du, du2;
    std::vector<char> piv;

    TriLU(const std::vector<double>& c, const std::vector<double>& e, double sigma) {
        const std::size_t n = c.size();
        dd.resize(n);
        dl.assign(n > 1 ? n - 1 : 0, 0.0);
        du.assign(n > 1 ? n - 1 : 0, 0.0);
        du2.assign(n > 2 ? n - 2 : 0, 0.0);
        piv.assign(n > 1 ? n - 1 : 0, 0);
        for (std::size_t i = 0; i < n; ++i) dd[i] = c[i] - sigma;
        for (std::size_t i = 0; i + 1 < n; ++i) dl[i] = du[i] = e[i];
        const double tiny = 1e-280;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::fabs(dd[i]) >= std::fabs(dl[i])) {
                if (std::fabs(dd[i]) < tiny) dd[i] = tiny;
                const double fact = dl[i] / dd[i];
                dl[i] = fact;
                dd[i + 1] -= fact * du[i];
                if (i + 2 < n) du2[i] = 0.0;
            } else {
                const double fact = dd[i] / dl[i];
                dd[i] = dl[i];
                dl[i] = fact;
                const double temp = du[i];
                du[i] = dd[i + 1];
                dd[i + 1] = temp - fact * dd[i + 1];
                if (i + 2 < n) {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                piv[i] = 1;
            }
        }
        if (std::fabs(dd[n - 1]) < tiny) dd[n - 1] = tiny;
    }

    void solve(std::vector<double>& b) const {
        const std::size_t n = dd.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!piv[i]) {
                b[i + 1] -= dl[i] * b[i];
            } else {
                const double temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl[i] * b[i + 1];
            }
        }
        b[n - 1] /= dd[n - 1];
        if (n >= 2) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
        for (std::size_t ii = n; ii >= 3; --ii) {
            const std::size_t i = ii - 3;
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
        }
    }
};

inline std::vector<double> inverse_iteration(const TridiagPencil& T, double mu) {
    const std::size_t n = T.c.size();
    const double sigma = mu * (1.0 + 1e-11) + 1e-13;
    const TriLU lu(T.c, T.e, sigma);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.3 * double(int(i % 7) - 3) / 3.0;
    for (int pass = 0; pass < 4; ++pass) {
        lu.solve(x);
        double norm = 0.0;
        for (double v : x) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : x) v /= norm;
    }
    return x;
}

struct DomainBounds {
    double s_min, s_max;
};

inline DomainBounds mode_domain(const DerivedParams& d, int k, int /*count*/, double t_min) {
    const ModeProblem mp{d, k};
    const double K = d.K;
    // Mass decay rates of the eigenfunctions: w psi^2 ~ e^{(K + 2 l_k) s} to
    // the left and ~ e^{-(2 sigma_k + 2) s} to the right.
    const double rate_left = K + 2.0 * mp.effective_degree();
    const double rate_right = 2.0 + 2.0 * std::sqrt(0.25 * (K - 2.0) * (K - 2.0) +
                                                    d.tau * d.tau * double(k) * double(k));
    double s_min = std::min(std::log(t_min), -(34.0 / rate_left) - 2.0);
    s_min = std::max(s_min, -19.0); // cosh overflow guard; mass there is ~e^{-38}
    const double s_max = std::max(3.0, 34.0 / rate_right + 2.0);
    return {s_min, s_max};
}

} // namespace detail

/**
 * Lowest `count` eigenvalues and W-orthonormal eigenfunctions of the mode-k
 * problem.  The uniform log-grid is doubled until every eigenvalue moves by
 * less than grid.conv_rel relative, then Richardson-extrapolated; the
 * eigenfunctions come from inverse iteration on the finest grid.
 */
inline ModeSpectrum solve_mode(const Context& ctx, int k, int count,
                               const GridSpec& grid = {}) {
    const auto& d = ctx.d();
    if (d.region == Region::BelowFS)
        throw InvalidParams("solve_mode: spectrum defined for b >= b_FS(a)");
    if (k < 0 || k > 8) throw InvalidParams("solve_mode: mode k must be in 0..8");
    if (count < 1 || count > 6) throw InvalidParams("solve_mode: count must be in 1..6");

    const auto dom = detail::mode_domain(d, k, count, grid.t_min);

    std::vector<double> prev;
    std::vector<double> cur;
    int n = grid.n0;
    detail::TridiagPencil pencil;
    double disc_error = 0.0;
    for (;; n *= 2) {
        pencil = detail::assemble_pencil(d, k, dom.s_min, dom.s_max, n);
        cur = detail::bisect_lowest(pencil, count);
        if (!prev.empty()) {
            double worst = 0.0;
            for (int j = 0; j < count; ++j)
                worst = std::max(worst, std::fabs(cur[std::size_t(j)] - prev[std::size_t(j)]) /
                                            std::fabs(cur[std::size_t(j)]));
            if (worst < grid.conv_rel) {
                disc_error = 0.0;
                for (int j = 0; j < count; ++j)
                    disc_error = std::max(
                        disc_error, std::fabs(cur[std::size_t(j)] - prev[std::size_t(j)]) / 3.0);
                break;
            }
        }
        if (2 * n > grid.n_max)
            throw NoConvergence("solve_mode: grid refinement did not converge");
        prev = cur;
    }

    ModeSpectrum out;
    out.k = k;
    out.disc_error = disc_error;
    out.eigenvalues.resize(std::size_t(count));
    for (int j = 0; j < count; ++j) // second-order scheme: Richardson in h^2
        out.eigenvalues[std::size_t(j)] =
            cur[std::size_t(j)] + (cur[std::size_t(j)] - prev[std::size_t(j)]) / 3.0;

    // Eigenvectors on the finest grid, Gram-Schmidt cleaned in the
    // B-orthonormal coordinates.
    std::vector<std::vector<double>> vecs;
    for (int j = 0; j < count; ++j) {
        auto w = detail::inverse_iteration(pencil, cur[std::size_t(j)]);
        for (const auto& prior : vecs) {
            double dot = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) dot += w[i] * prior[i];
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= dot * prior[i];
        }
        double norm = 0.0;
        for (double v : w) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : w) v /= norm;
        vecs.push_back(std::move(w));
    }

    const ModeProblem mp{d, k};
    const double beta = 0.5 * (d.K - 2.0);
    const double alpha0 = k == 0 ? 0.0 : mp.effective_degree();
    const double alpha_inf = mp.decay_exponent();
    for (auto& w : vecs) {
        // Trim tail regions carrying negligible mass (w holds the
        // B-orthonormal coordinates, so node mass is w_i^2): the data there
        // is inverse-iteration noise, amplified by e^{-beta s} on the left,
        // and the declared power tails represent the eigenfunction better.
        const std::size_t nno = w.size();
        double acc = 0.0;
        std::vector<double> mass(nno);
        for (std::size_t i = 0; i < nno; ++i) {
            acc += w[i] * w[i];
            mass[i] = acc;
        }
        std::size_t first = 0, last = nno - 1;
        while (first + 8 < last && mass[first] < 1e-13) ++first;
        while (last > first + 8 && acc - mass[last - 1] < 1e-13) --last;

        // Back to the radial factor: eta = e^{-beta s} psi, psi = w / sqrt(B).
        const std::size_t span = last - first + 1;
        std::vector<double> eta(span), slope(span);
        for (std::size_t i = 0; i < span; ++i) {
            const std::size_t j = first + i;
            eta[i] = std::exp(-beta * pencil.s_nodes[j]) * w[j] / std::sqrt(pencil.bdiag[j]);
        }
        const double h = pencil.s_nodes[1] - pencil.s_nodes[0];
        for (std::size_t i = 0; i < span; ++i) {
            if (i == 0)
                slope[i] = (eta[1] - eta[0]) / h;
            else if (i == span - 1)
                slope[i] = (eta[i] - eta[i - 1]) / h;
            else
                slope[i] = (eta[i + 1] - eta[i - 1]) / (2.0 * h);
        }
        // Sign convention: positive on approach from the origin.
        double vmax = 0.0;
        for (double v : eta) vmax = std::max(vmax, std::fabs(v));
        for (double v : eta) {
            if (std::fabs(v) > 1e-3 * vmax) {
                if (v < 0.0)
                    for (std::size_t i = 0; i < span; ++i) eta[i] = -eta[i], slope[i] = -slope[i];
                break;
            }
        }

        // Decimate to a manageable interpolation grid.
        const std::size_t stride = std::max<std::size_t>(1, span / 4096);
        std::vector<double> sk, vk, mk;
        for (std::size_t i = 0; i < span; i += stride) {
            sk.push_back(pencil.s_nodes[first + i]);
            vk.push_back(eta[i]);
            mk.push_back(slope[i]);
        }
        if (sk.back() != pencil.s_nodes[last]) {
            sk.push_back(pencil.s_nodes[last]);
            vk.push_back(eta[span - 1]);
            mk.push_back(slope[span - 1]);
        }
        out.eigenfunctions.push_back(RadialProfile::grid_with_slopes(
            std::move(sk), std::move(vk), std::move(mk), {alpha0, alpha_inf}));
    }
    return out;
}

/// Rayleigh quotient of the mode-k form at a given radial profile,
/// evaluated by quadrature (test anchor for the known eigenpairs).
inline double rayleigh_quotient(const Context& ctx, int k, const RadialProfile& prof) {
    const double K = ctx.d().K, tau = ctx.d().tau;
    auto info = detail::integrand_info({&prof});
    info.tails = {2.0 * prof.deriv_alpha0() + K - 1.0,
                  2.0 * (prof.tails().alpha_inf + 1.0) - (K - 1.0)};
    const double num_grad = detail::integrate_info(
        [&](double t) {
            const double dp = prof.deriv(t);
            return dp * dp * std::pow(t, K - 1.0);
        },
        info, ctx.quad());
    double num_ang = 0.0;
    if (k > 0) {
        auto info2 = detail::integrand_info({&prof});
        info2.tails = {2.0 * prof.tails().alpha0 + K - 3.0,
                       2.0 * prof.tails().alpha_inf - (K - 3.0)};
        num_ang = detail::integrate_info(
            [&](double t) {
                const double v = prof.value(t);
                return v * v * std::pow(t, K - 3.0);
            },
            info2, ctx.quad());
    }
    auto info3 = detail::integrand_info({&prof});
    info3.tails = {2.0 * prof.tails().alpha0 + K - 1.0,
                   2.0 * prof.tails().alpha_inf + 4.0 - (K - 1.0)};
    const double den = detail::integrate_info(
        [&](double t) {
            const double v = prof.value(t);
            const double u = 1.0 + t * t;
            return K * (K - 2.0) * std::pow(t, K - 1.0) / (u * u) * v * v;
        },
        info3, ctx.quad());
    return (num_grad + tau * tau * double(k) * double(k) * num_ang) / den;
}

/**
 * Assembles modes k = 0..3 into the global eigenvalue list: mu1 = 1 (radial
 * ground state), mu2 = q - 1, mu3 = min(third radial, lowest k = 1), with
 * the k >= 1 levels carrying multiplicity two.
 */
inline SpectrumSummary full_spectrum(const Context& ctx, const GridSpec& grid = {}) {
    const double q = ctx.d().q;
    const ModeSpectrum m0 = solve_mode(ctx, 0, 3, grid);
    const ModeSpectrum m1 = solve_mode(ctx, 1, 2, grid);
    const ModeSpectrum m2 = solve_mode(ctx, 2, 1, grid);
    const ModeSpectrum m3 = solve_mode(ctx, 3, 1, grid);

    SpectrumSummary out;
    out.mu1 = m0.eigenvalues[0];
    out.mu2 = m0.eigenvalues[1];
    if (m1.eigenvalues[0] < m0.eigenvalues[2]) {
        out.mu3 = m1.eigenvalues[0];
        out.mu3_mode = 1;
    } else {
        out.mu3 = m0.eigenvalues[2];
        out.mu3_mode = 0;
    }
    if (!(m2.eigenvalues[0] > out.mu3))
        throw NoConvergence("full_spectrum: k = 2 level below mu3 contradicts mode monotonicity");

    const double tol = 1e-6;
    int kernel = 0;
    for (double mu : m0.eigenvalues)
        if (std::fabs(mu - (q - 1.0)) <= tol * (q - 1.0)) kernel += 1;
    for (const ModeSpectrum* m : {&m1, &m2, &m3})
        for (double mu : m->eigenvalues)
            if (std::fabs(mu - (q - 1.0)) <= tol * (q - 1.0)) kernel += 2;
    out.kernel_dim = kernel;
    return out;
}

/// Eigenvalues within rel_tol of q - 1 across modes 0..3, counted with the
/// angular multiplicity (1 for k = 0, 2 for k >= 1).
inline int kernel_dimension(const Context& ctx, double rel_tol = 1e-6,
                            const GridSpec& grid = {}) {
    const double q = ctx.d().q;
    int kernel = 0;
    for (int k = 0; k <= 3; ++k) {
        const ModeSpectrum m = solve_mode(ctx, k, k == 0 ? 3 : 2, grid);
        for (double mu : m.eigenvalues)
            if (std::fabs(mu - (q - 1.0)) <= rel_tol * (q - 1.0)) kernel += k == 0 ? 1 : 2;
    }
    return kernel;
}

/// The eigenfunction attaining mu3, as a harmonic function (k = 0 grid
/// profile, or the k = 1 cosine term).
inline HarmonicFunction third_eigenfunction(const Context& ctx, const GridSpec& grid = {}) {
    const auto& d = ctx.d();
    if (d.region == Region::OnFS || d.region == Region::BelowFS)
        throw InvalidParams("third_eigenfunction: defined for b strictly above b_FS(a)");
    const ModeSpectrum m0 = solve_mode(ctx, 0, 3, grid);
    const ModeSpectrum m1 = solve_mode(ctx, 1, 1, grid);
    HarmonicFunction e3(d);
    if (m1.eigenvalues[0] < m0.eigenvalues[2])
        e3.add_term(1, Parity::Cos, m1.eigenfunctions[0]);
    else
        e3.add_term(0, Parity::Cos, m0.eigenfunctions[2]);
    return e3;
}

} // namespace ckn
