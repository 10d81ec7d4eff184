#pragma once

// Self-verification suite: one runner per acceptance criterion, each
// returning pass/fail plus a one-line summary.  Shared by the `ckn verify`
// command and the acceptance test binary.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ckn/params.hpp"
#include "ckn/profiles.hpp"
#include "ckn/spectrum.hpp"
#include "ckn/stability.hpp"

namespace ckn::verify {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    bool skipped = false;
    double seconds = 0.0;
    std::string detail;
};

struct Options {
    bool quick = false;     // skip the eigensolver and expansion criteria
    double c_ab_scale = 1.0; // fault injection knob used by the test harness
};

namespace detail {

using clock = std::chrono::steady_clock;

struct Check {
    bool ok = true;
    std::string log;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            log += (log.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) {
        log += (log.empty() ? "" : "; ") + what;
    }
};

inline std::string fmt(double v, int prec = 6) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

inline std::vector<double> geometric(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        g[std::size_t(i)] = lo * std::pow(hi / lo, double(i) / double(n - 1));
    return g;
}

/// Deterministic uniform generator (mirrors the unit-test helper).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    double uniform() {
        state_ ^= state_ << 13;
        state_ ^= state_ >> 7;
        state_ ^= state_ << 17;
        return double(state_ >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

struct Fig2Row {
    double a, b_fs, b_fs_star, b_star;
    bool has_selection;
};

/// The printed table: eleven a values; the b* column participates in a
/// selection region only from the threshold row downward.
inline const std::vector<Fig2Row>& fig2_rows() {
    static const std::vector<Fig2Row> rows = {
        {-0.5, -0.052786, 0.118033, 0.309791, false},
        {-0.6, -0.085504, 0.079428, 0.082212, false},
        {-0.641867, -0.101699, 0.059573, 0.059573, true},
        {-0.7, -0.126537, 0.028917, 0.025795, true},
        {-0.8, -0.175304, -0.031000, -0.037875, true},
        {-1.0, -0.292893, -0.171572, -0.181928, true},
        {-2.0, -1.105572, -1.055728, -1.063273, true},
        {-3.0, -2.051316, -2.026334, -2.030511, true},
        {-4.0, -3.029857, -3.015154, -3.017701, true},
        {-5.0, -4.019419, -4.009804, -4.011497, true},
        {-10.0, -9.004962, -9.002487, -9.002933, true},
    };
    return rows;
}

// --- criterion bodies -------------------------------------------------------

inline Check criterion_figure2() {
    Check c;
    for (const auto& row : fig2_rows()) {
        const double bfs = felli_schneider(row.a);
        const double bstar_fs = felli_schneider_star(row.a);
        c.require(std::fabs(bfs - row.b_fs) < 2e-6,
                  "b_fs(" + fmt(row.a) + ") = " + fmt(bfs, 9));
        c.require(std::fabs(bstar_fs - row.b_fs_star) < 2e-6,
                  "b_fs_star(" + fmt(row.a) + ") = " + fmt(bstar_fs, 9));
        if (row.has_selection) {
            const double bstar = solve_b_star_extended(row.a);
            c.require(std::fabs(bstar - row.b_star) < 1e-5,
                      "b_star(" + fmt(row.a) + ") = " + fmt(bstar, 9));
        }
    }
    if (c.ok) c.note("11 rows reproduced (b_fs, b_fs_star to 2e-6; b_star to 1e-5)");
    return c;
}

inline Check criterion_thresholds() {
    Check c;
    const ThresholdSet ts = solve_thresholds();
    c.require(std::fabs(ts.k_star - 6.698818) < 1e-5, "K* = " + fmt(ts.k_star, 9));
    c.require(std::fabs(ts.a_star - (-0.641866)) < 1e-5, "a* = " + fmt(ts.a_star, 9));
    if (c.ok) c.note("K* = " + fmt(ts.k_star, 8) + ", a* = " + fmt(ts.a_star, 8));
    return c;
}

inline Check criterion_quadrature(double c_ab_scale) {
    Check c;
    for (double K : {3.0, 4.0, 6.828427, 8.0, 11.656854, 20.0}) {
        auto f = [K](double t) { return std::pow(t, K - 1.0) * std::pow(1.0 + t * t, -K); };
        const double got = integrate_halfline(f, {K - 1.0, K + 1.0});
        const double want =
            0.5 * std::exp(2.0 * std::lgamma(K / 2.0) - std::lgamma(K));
        c.require(std::fabs(got - want) <= 1e-10 * std::fabs(want),
                  "Beta identity at K = " + fmt(K));
    }
    Context ctx = Context({-1.0, -0.25}).with_perturbed_c_ab(c_ab_scale);
    for (double lam : {0.1, 1.0, 10.0}) {
        const HarmonicFunction b = normalized_bubble_B(ctx, lam);
        const double star = star_norm(ctx, b);
        c.require(std::fabs(star - 1.0) <= 1e-8,
                  "||B_" + fmt(lam) + "||_* = " + fmt(star, 10));
        const double grad = grad_norm_sq(ctx, b);
        c.require(std::fabs(grad - ctx.consts().S_ab) <= 1e-8 * ctx.consts().S_ab,
                  "||B_" + fmt(lam) + "||^2 = " + fmt(grad, 10));
    }
    if (c.ok) c.note("Beta identities to 1e-10; bubble normalization to 1e-8");
    return c;
}

inline Check criterion_extremal() {
    Check c;
    const Context ctx({-1.0, -0.25});
    const double res = pde_residual(ctx, RadialProfile::bubble_u(ctx));
    c.require(res <= 1e-8, "pde_residual(U) = " + fmt(res, 3));
    const HarmonicFunction u = bubble_U(ctx);
    const double grad = grad_norm_sq(ctx, u);
    const double star_q = star_norm_q(ctx, u);
    c.require(std::fabs(grad - star_q) <= 1e-9 * grad,
              "||U||^2 vs ||U||_*^q: " + fmt(grad, 12) + " vs " + fmt(star_q, 12));
    const double S_quotient = grad / std::pow(star_q, 2.0 / ctx.d().q);
    c.require(std::fabs(S_quotient - ctx.consts().S_ab) <= 1e-9 * ctx.consts().S_ab,
              "S quotient = " + fmt(S_quotient, 12));
    if (c.ok)
        c.note("residual " + fmt(res, 2) + "; extremal identities to 1e-9; S = " +
               fmt(ctx.consts().S_ab, 8));
    return c;
}

inline Check criterion_spectrum() {
    Check c;
    const Context ctx({-1.0, -0.25});
    const ModeSpectrum m0 = solve_mode(ctx, 0, 3);
    const double want0[3] = {1.0, 5.0 / 3.0, 2.5};
    for (int j = 0; j < 3; ++j)
        c.require(std::fabs(m0.eigenvalues[std::size_t(j)] - want0[j]) < 1e-5,
                  "k=0 eigenvalue " + fmt(m0.eigenvalues[std::size_t(j)], 9));
    const double mu_k1 =
        (ctx.d().q - 1.0) / (1.0 - f_curve(ctx.d().a, ctx.d().b));
    const ModeSpectrum m1 = solve_mode(ctx, 1, 1);
    c.require(std::fabs(m1.eigenvalues[0] - mu_k1) < 1e-4,
              "k=1 bottom " + fmt(m1.eigenvalues[0], 9) + " vs " + fmt(mu_k1, 9));
    const SpectrumSummary s = full_spectrum(ctx);
    c.require(s.mu3_mode == 1, "mu3 mode at (-1,-0.25)");

    const Context c2({-1.0, -0.1});
    const SpectrumSummary s2 = full_spectrum(c2);
    c.require(std::fabs(s2.mu3 - 22.0 / 15.0) < 1e-4, "mu3(-1,-0.1) = " + fmt(s2.mu3, 9));
    c.require(s2.mu3_mode == 0, "mu3 mode at (-1,-0.1)");
    if (c.ok)
        c.note("k=0: {1, 5/3, 5/2}; k=1 bottom = " + fmt(m1.eigenvalues[0], 8) +
               "; mu3(-1,-0.1) = 22/15, radial branch");
    return c;
}

inline Check criterion_kernel() {
    Check c;
    c.require(kernel_dimension(Context({-1.0, -0.25})) == 1, "kernel dim at (-1,-0.25)");
    c.require(kernel_dimension(Context({-2.0, -1.06})) == 1, "kernel dim at (-2,-1.06)");
    const Context on_fs({-1.0, -0.2928932});
    c.require(kernel_dimension(on_fs) == 3, "kernel dim on the curve");

    const ModeSpectrum m1 = solve_mode(on_fs, 1, 1);
    const double K = on_fs.d().K;
    const RadialProfile vp = RadialProfile::kernel_vprime(K);
    auto wnorm_sq = [&](const RadialProfile& p) {
        auto info = ckn::detail::integrand_info({&p});
        info.tails = {2.0 * p.tails().alpha0 + K - 1.0,
                      2.0 * p.tails().alpha_inf + 4.0 - (K - 1.0)};
        return ckn::detail::integrate_info(
            [&](double t) {
                const double u = 1.0 + t * t;
                const double v = p.value(t);
                return K * (K - 2.0) * std::pow(t, K - 1.0) / (u * u) * v * v;
            },
            info, on_fs.quad());
    };
    const RadialProfile vp_unit = vp.scaled(1.0 / std::sqrt(wnorm_sq(vp)));
    const RadialProfile diff =
        RadialProfile::combo({{1.0, m1.eigenfunctions[0]}, {-1.0, vp_unit}});
    const double mismatch = std::sqrt(wnorm_sq(diff));
    c.require(mismatch < 1e-6, "V' match in W-norm: " + fmt(mismatch, 3));
    if (c.ok)
        c.note("kernel dims 1/1/3; k=1 kernel matches V' to " + fmt(mismatch, 2) +
               " in W-norm");
    return c;
}

inline Check criterion_dist_equivalence() {
    Check c;
    const Context ctx = Context({-1.0, -0.25}).tightened(1e-12, 1e-15);
    const HarmonicFunction e3 = third_eigenfunction(ctx);
    const RadialProfile& e3_profile = e3.terms()[0].profile;
    Rng rng(0x5eed0007);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        HarmonicFunction u(ctx.d());
        u.add_term(0, Parity::Cos, RadialProfile::bubble_b(ctx, rng.uniform(0.3, 3.0)),
                   rng.uniform(0.5, 2.0));
        u.add_term(0, Parity::Cos, RadialProfile::kernel_eta0(ctx.d().K),
                   rng.uniform(-0.3, 0.3));
        if (i % 2 == 0) u.add_term(1, Parity::Cos, e3_profile, rng.uniform(-0.3, 0.3));
        if (i % 3 == 0)
            u.add_term(1, Parity::Sin, RadialProfile::kernel_vprime(ctx.d().K),
                       rng.uniform(-0.3, 0.3));
        const double d1 = dist_to_M(ctx, u);
        const double d2 = dist_direct(ctx, u);
        const double rel = std::fabs(d1 - d2) / std::max(d1, 1e-12);
        worst = std::max(worst, rel);
        c.require(rel <= 1e-6, "case " + fmt(double(i), 2) + ": rel gap " + fmt(rel, 3));
    }
    // Local decomposition anchor: a small orthogonal perturbation moves the
    // distance by exactly its own norm.
    {
        const double eps = 0.01;
        HarmonicFunction u = bubble_U(ctx);
        u.add_term(1, Parity::Cos, e3_profile, eps);
        HarmonicFunction e3_only(ctx.d());
        e3_only.add_term(1, Parity::Cos, e3_profile);
        const double want = eps * std::sqrt(grad_norm_sq(ctx, e3_only));
        c.require(std::fabs(dist_direct(ctx, u) - want) <= 1e-5 * want,
                  "dist(U + eps e3) = " + fmt(dist_direct(ctx, u), 9) + " vs eps ||e3|| = " +
                      fmt(want, 9));
    }
    if (c.ok) c.note("20 functions; worst relative gap " + fmt(worst, 2));
    return c;
}

inline Check criterion_two_bubble() {
    Check c;
    const Context ctx = Context({-1.0, -0.25}).tightened(1e-12, 1e-15);
    const double S = ctx.consts().S_ab;
    const double q = ctx.d().q;
    const double limit_want = 2.0 - std::pow(2.0, 2.0 / q);
    const double coef_want = -2.0 * (std::pow(2.0, 2.0 / q) - 1.0);

    const auto grid = geometric(1e-9, 1e-6, 8);
    const ExpansionFit fg = fit_expansion(ctx, DeficitQuantity::GradSq, grid);
    const ExpansionFit fs = fit_expansion(ctx, DeficitQuantity::StarSq, grid);
    const ExpansionFit fe = fit_expansion(ctx, DeficitQuantity::E, grid);
    c.require(std::fabs(fg.exponent - 1.0) <= 0.03, "grad exponent " + fmt(fg.exponent, 5));
    c.require(std::fabs(fs.exponent - 1.0) <= 0.03, "star exponent " + fmt(fs.exponent, 5));
    c.require(std::fabs(fe.exponent - 1.0) <= 0.03, "E exponent " + fmt(fe.exponent, 5));
    c.require(std::fabs(fe.limit - 0.318207) <= 1e-3, "E limit " + fmt(fe.limit, 9));

    // Coefficients of lambda^{-a} through small-lambda secants (the
    // free-exponent fit coefficient is ill-conditioned: an exponent error
    // de rescales it by lambda^{-de}).  The three expansions share the
    // constant C* = c_ab d_ab; the criterion value is the E coefficient
    // normalized by that shared constant.
    auto secant = [&](DeficitQuantity which) {
        const double l1 = 3e-9, l2 = 1e-9;
        return (ckn::detail::two_bubble_quantity(ctx, which, l1) -
                ckn::detail::two_bubble_quantity(ctx, which, l2)) /
               (l1 - l2);
    };
    const double cg = secant(DeficitQuantity::GradSq);
    const double cs = secant(DeficitQuantity::StarSq);
    const double ce = secant(DeficitQuantity::E);
    const double c_star = cg / (2.0 * S);
    c.require(std::fabs(ce / c_star - coef_want) <= 0.05 * std::fabs(coef_want),
              "normalized E coefficient " + fmt(ce / c_star, 6));
    c.require(std::fabs(cs / cg - std::pow(2.0, 2.0 / q) / S) <=
                  0.05 * std::pow(2.0, 2.0 / q) / S,
              "(ii)/(i) ratio " + fmt(cs / cg, 6));

    // Strict bound E(u^lambda) < 2 - 2^{2/q} on every sampled lambda.
    auto samples = grid;
    for (double l : geometric(1e-3, 3e-2, 8)) samples.push_back(l);
    for (double l : samples) {
        const double E = ckn::detail::two_bubble_quantity(ctx, DeficitQuantity::E, l);
        c.require(E < limit_want, "E(" + fmt(l, 3) + ") = " + fmt(E, 9));
    }
    if (c.ok)
        c.note("E limit " + fmt(fe.limit, 8) + "; exponents ~1 to " +
               fmt(std::max({std::fabs(fg.exponent - 1.0), std::fabs(fs.exponent - 1.0),
                             std::fabs(fe.exponent - 1.0)}),
                   2) +
               "; shared constant C* = " + fmt(c_star, 6) + " (c_ab d_ab = " +
               fmt(ctx.consts().c_ab * ctx.consts().d_ab, 6) +
               "); E coefficient / C* = " + fmt(ce / c_star, 6));
    return c;
}

inline Check criterion_spectral_direction(double* min_E_out = nullptr) {
    Check c;
    const Context ctx = Context({-1.0, -0.25}).tightened(1e-12, 1e-15);
    const HarmonicFunction e3 = third_eigenfunction(ctx);
    const double eps_list[3] = {0.05, 0.025, 0.0125};
    double E[3];
    for (int i = 0; i < 3; ++i) {
        HarmonicFunction u = bubble_U(ctx);
        u.add_term(e3.terms()[0].k, Parity::Cos, e3.terms()[0].profile, eps_list[i]);
        const DeficitReport r = deficit_report(ctx, u);
        c.require(r.E.has_value(), "E defined at eps " + fmt(eps_list[i]));
        E[i] = r.E.value_or(0.0);
    }
    // Richardson in eps^2 (the quotient is even in eps).
    const double X1 = (4.0 * E[1] - E[0]) / 3.0;
    const double X2 = (4.0 * E[2] - E[1]) / 3.0;
    const double extrapolated = (16.0 * X2 - X1) / 15.0;
    const double want = stability_upper_bound({-1.0, -0.25});
    c.require(std::fabs(extrapolated - want) <= 1e-3,
              "extrapolated " + fmt(extrapolated, 9) + " vs " + fmt(want, 9));
    if (min_E_out) *min_E_out = std::min({E[0], E[1], E[2]});
    if (c.ok)
        c.note("E(U + eps e3) -> " + fmt(extrapolated, 8) + " vs bound " + fmt(want, 8));
    return c;
}

inline Check criterion_degenerate() {
    Check c;
    const Context on_fs({-1.0, -0.2928932});
    const double eps[4] = {0.2, 0.1, 0.05, 0.025};
    const auto seq = degenerate_sequence(on_fs, eps);
    for (std::size_t i = 0; i + 1 < seq.size(); ++i)
        c.require(seq[i].second > seq[i + 1].second,
                  "E not decreasing at eps " + fmt(seq[i + 1].first));
    c.require(seq.back().second < 0.02, "smallest E = " + fmt(seq.back().second, 6));

    const Context tight = on_fs.tightened(1e-12, 1e-15);
    HarmonicFunction z1(tight.d());
    z1.add_term(1, Parity::Cos, RadialProfile::kernel_vprime(tight.d().K));
    const double z1_norm = std::sqrt(grad_norm_sq(tight, z1));
    for (double e : eps) {
        HarmonicFunction u = bubble_U(tight);
        u.add_term(1, Parity::Cos, RadialProfile::kernel_vprime(tight.d().K), e);
        const double d = dist_to_M(tight, u);
        c.require(std::fabs(d - e * z1_norm) <= 1e-5 * e * z1_norm,
                  "dist at eps " + fmt(e) + ": " + fmt(d, 9) + " vs " + fmt(e * z1_norm, 9));
    }
    if (c.ok)
        c.note("E strictly decreasing, min " + fmt(seq.back().second, 4) +
               "; dist = eps ||Z1|| to 1e-5");
    return c;
}

inline Check criterion_invariants(double min_spectral_E) {
    Check c;
    Rng rng(0x5eed000b);

    // Parameter algebra identity on 100 random pairs.
    for (int i = 0; i < 100; ++i) {
        const double a = -std::exp(rng.uniform(std::log(0.02), std::log(8.0)));
        const double b = a + rng.uniform(0.05, 0.95);
        const DerivedParams d = derive({a, b});
        const double lhs = d.tau * d.tau * (d.q - 1.0) * std::pow(d.C_ab, d.q - 2.0);
        if (std::isfinite(d.C_ab))
            c.require(std::fabs(lhs - d.K * (d.K + 2.0)) <= 1e-10 * d.K * (d.K + 2.0),
                      "tau^2 (q-1) C^{q-2} identity at a=" + fmt(a));
    }

    // CKN positivity of the deficit on 100 random functions spread over
    // three parameter points.
    const Context ctx({-1.0, -0.25});
    const Context alt1({-0.6, 0.0});
    const Context alt2({-1.5, -0.6});
    for (int i = 0; i < 100; ++i) {
        const Context& cc = i % 3 == 0 ? alt1 : i % 3 == 1 ? alt2 : ctx;
        HarmonicFunction u(cc.d());
        u.add_term(0, Parity::Cos, RadialProfile::bubble_b(cc, rng.uniform(0.2, 5.0)),
                   rng.uniform(0.3, 2.0));
        u.add_term(0, Parity::Cos, RadialProfile::kernel_eta0(cc.d().K),
                   rng.uniform(-0.6, 0.6));
        if (i % 4 == 0)
            u.add_term(1, Parity::Cos, RadialProfile::kernel_vprime(cc.d().K),
                       rng.uniform(-0.6, 0.6));
        const double deficit =
            grad_norm_sq(cc, u) -
            cc.consts().S_ab * std::pow(star_norm(cc, u), 2.0);
        c.require(deficit > -1e-9 * grad_norm_sq(cc, u), "deficit positivity case " + fmt(double(i), 3));
    }

    // Scale/dilation invariance of the quotient on 20 combinations.
    {
        HarmonicFunction u(ctx.d());
        u.add_term(0, Parity::Cos, RadialProfile::bubble_b(ctx), 1.0);
        u.add_term(0, Parity::Cos, RadialProfile::kernel_eta0(ctx.d().K), 0.3);
        u.add_term(1, Parity::Cos, RadialProfile::kernel_vprime(ctx.d().K), 0.2);
        const DeficitReport base = deficit_report(ctx, u);
        for (double cc : {-2.0, 0.5, 3.0, 1.3})
            for (double lam : {0.2, 5.0, 1.7, 0.6, 2.4}) {
                const DeficitReport r = deficit_report(ctx, u.scaled(cc).dilated(lam));
                c.require(r.E && base.E &&
                              std::fabs(*r.E - *base.E) <= 1e-7 * std::fabs(*base.E),
                          "quotient invariance at c=" + fmt(cc) + ", lambda=" + fmt(lam));
            }
    }

    // Eigen-structure invariants on random parameter draws (quick grids).
    for (int i = 0; i < 6; ++i) {
        const double a = rng.uniform(-2.0, -0.5);
        const double k_fs = 2.0 / (1.0 + a - felli_schneider(a));
        const double b = a + 1.0 - 2.0 / (k_fs + rng.uniform(0.4, 8.0));
        const Context cc({a, b});
        double prev = 0.0;
        for (int k = 0; k <= 2; ++k) {
            const ModeSpectrum m = solve_mode(cc, k, 2, GridSpec::quick());
            c.require(m.eigenvalues[0] > prev,
                      "mode monotonicity at a=" + fmt(a) + ", k=" + fmt(double(k), 1));
            prev = m.eigenvalues[0];
        }
    }
    {
        const ModeSpectrum m0 = solve_mode(ctx, 0, 4);
        auto zeros = [](const RadialProfile& p) {
            int z = 0;
            double prev = 0.0, vmax = 0.0;
            std::vector<double> vals;
            for (int i = 0; i <= 3000; ++i) {
                const double t = std::pow(10.0, -4.0 + 7.0 * i / 3000.0);
                vals.push_back(p.value(t));
                vmax = std::max(vmax, std::fabs(vals.back()));
            }
            for (double v : vals) {
                if (std::fabs(v) < 1e-8 * vmax) continue;
                if (prev != 0.0 && v * prev < 0.0) ++z;
                prev = v;
            }
            return z;
        };
        for (int j = 0; j < 4; ++j)
            c.require(zeros(m0.eigenfunctions[std::size_t(j)]) == j,
                      "Sturm zero count at index " + fmt(double(j), 1));
        // W-orthonormality through quadrature of the returned profiles.
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) {
                HarmonicFunction ui(ctx.d()), uj(ctx.d());
                ui.add_term(0, Parity::Cos, m0.eigenfunctions[std::size_t(i)]);
                uj.add_term(0, Parity::Cos, m0.eigenfunctions[std::size_t(j)]);
                const double g =
                    weighted_l2_U(ctx, ui, uj) * ctx.d().tau / (2.0 * M_PI);
                c.require(std::fabs(g - (i == j ? 1.0 : 0.0)) <= 1e-6,
                          "Gram entry (" + fmt(double(i), 1) + "," + fmt(double(j), 1) +
                              ") = " + fmt(g, 6));
            }
    }

    // Upper-bound consistency: the sampled minimum of E respects both
    // closed-form bounds.
    const double bound = std::min(stability_upper_bound({-1.0, -0.25}),
                                  2.0 - std::pow(2.0, 2.0 / ctx.d().q));
    c.require(min_spectral_E <= bound + 1e-3,
              "min sampled E = " + fmt(min_spectral_E, 8) + " vs bound " + fmt(bound, 8));

    if (c.ok) c.note("algebra x100, positivity x100, invariance x20, eigen structure ok");
    return c;
}

} // namespace detail

inline std::vector<CriterionResult> run_acceptance(const Options& opt = {}) {
    using detail::Check;
    std::vector<CriterionResult> results;
    double min_spectral_E = 1e9;

    struct Entry {
        int id;
        const char* name;
        double budget_s;
        bool heavy; // skipped in quick mode
        std::function<Check()> body;
    };
    const std::vector<Entry> entries = {
        {1, "figure2-reproduction", 5.0, false, [] { return detail::criterion_figure2(); }},
        {2, "thresholds", 1.0, false, [] { return detail::criterion_thresholds(); }},
        {3, "quadrature-oracles", 5.0, false,
         [&] { return detail::criterion_quadrature(opt.c_ab_scale); }},
        {4, "extremal-identities", 5.0, false, [] { return detail::criterion_extremal(); }},
        {5, "spectrum-values", 60.0, true, [] { return detail::criterion_spectrum(); }},
        {6, "degeneracy-switch", 60.0, true, [] { return detail::criterion_kernel(); }},
        {7, "distance-equivalence", 60.0, true,
         [] { return detail::criterion_dist_equivalence(); }},
        {8, "two-bubble-expansion", 120.0, true,
         [] { return detail::criterion_two_bubble(); }},
        {9, "spectral-direction-limit", 60.0, true,
         [&] { return detail::criterion_spectral_direction(&min_spectral_E); }},
        {10, "degenerate-instability", 60.0, true,
         [] { return detail::criterion_degenerate(); }},
        {11, "invariant-suites", 120.0, true,
         [&] { return detail::criterion_invariants(min_spectral_E); }},
    };

    for (const auto& entry : entries) {
        CriterionResult r;
        r.id = entry.id;
        r.name = entry.name;
        if (opt.quick && entry.heavy) {
            r.skipped = true;
            r.detail = "skipped in quick mode";
            results.push_back(std::move(r));
            continue;
        }
        const auto t0 = detail::clock::now();
        try {
            Check c = entry.body();
            r.pass = c.ok;
            r.detail = c.log;
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(detail::clock::now() - t0).count();
        if (r.pass && r.seconds > entry.budget_s) {
            r.pass = false;
            r.detail += "; runtime " + detail::fmt(r.seconds, 3) + " s over budget " +
                        detail::fmt(entry.budget_s, 3) + " s";
        }
        results.push_back(std::move(r));
    }
    return results;
}

inline bool all_passed(const std::vector<CriterionResult>& rs) {
    for (const auto& r : rs)
        if (!r.skipped && !r.pass) return false;
    return true;
}

} // namespace ckn::verify
