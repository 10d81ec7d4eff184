#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ckn/errors.hpp"
#include "ckn/profiles.hpp"

namespace ckn {

/// Bracket for the bubble-scale search: log lambda in [-12, 12].  Pairings
/// against bubbles outside this window are below 1e-10 for every test
/// function used here.
inline constexpr double kLogLambdaLo = -12.0;
inline constexpr double kLogLambdaHi = 12.0;

/**
 * (u, |x|^{-qb} B_lambda^{q-1}): the pairing of u against the nonlinear
 * image of the normalized bubble.  Only the radial part of u contributes
 * (angular orthogonality); equals S^{-1} <u, B_lambda> in the D-product.
 */
inline double pair_with_bubble(const Context& ctx, const HarmonicFunction& u,
                               double lambda) {
    const RadialProfile* radial = u.radial_part();
    if (!radial) return 0.0;
    const double K = ctx.d().K, tau = ctx.d().tau, q = ctx.d().q;
    const RadialProfile bl = RadialProfile::bubble_b(ctx, lambda);
    auto info = detail::integrand_info({radial, &bl});
    info.tails = {radial->tails().alpha0 + K - 1.0, radial->tails().alpha_inf + 3.0};
    const double integral = detail::integrate_info(
        [&](double t) {
            return std::pow(bl.value(t), q - 1.0) * radial->value(t) * std::pow(t, K - 1.0);
        },
        info, ctx.quad());
    return 2.0 * M_PI * tau * integral;
}

struct MValue {
    double value = 0.0;    // sup of the squared pairing
    double argmax = 1.0;   // maximizing lambda (meaningful when interior)
    bool boundary = false; // supremum escaped to the bracket edge
};

/// m(u) = sup_lambda (u, |x|^{-qb} B_lambda^{q-1})^2 over the log-lambda
/// bracket; a grid pass locates the best cell, golden section refines it.
inline MValue m_of(const Context& ctx, const HarmonicFunction& u) {
    auto f = [&](double lambda) {
        const double p = pair_with_bubble(ctx, u, lambda);
        return p * p;
    };
    const LogMaxResult r = maximize_log_scale(f, kLogLambdaLo, kLogLambdaHi, 1e-8, 49);
    MValue out;
    out.value = r.max;
    out.argmax = r.argmax;
    out.boundary = !r.interior;
    if (out.value < 1e-28) { // pairing identically ~0 (pure angular content)
        out.value = 0.0;
        out.boundary = true;
    }
    return out;
}

/// dist(u, M) via the projection identity dist^2 = ||u||^2 - S m(u).
inline double dist_to_M(const Context& ctx, const HarmonicFunction& u) {
    const double grad = grad_norm_sq(ctx, u);
    const double m = m_of(ctx, u).value;
    return std::sqrt(std::max(0.0, grad - ctx.consts().S_ab * m));
}

/**
 * Direct minimization of ||u - c U_lambda|| over (c, lambda): c eliminated
 * in closed form, lambda by the same log-scale search.  Slow oracle route,
 * independent of the pairing identity.
 */
inline double dist_direct(const Context& ctx, const HarmonicFunction& u) {
    const double grad = grad_norm_sq(ctx, u);
    const double normU_sq = ctx.consts().normU_sq;
    auto f = [&](double lambda) {
        const HarmonicFunction ul = bubble_U(ctx, lambda);
        const double ip = inner_product_grad(ctx, u, ul);
        return ip * ip / normU_sq;
    };
    const LogMaxResult r = maximize_log_scale(f, kLogLambdaLo, kLogLambdaHi, 1e-8, 49);
    return std::sqrt(std::max(0.0, grad - r.max));
}

struct DeficitReport {
    double grad_sq = 0;
    double star = 0;
    double m_value = 0;
    double m_argmax = 1.0;
    bool m_boundary = false;
    double dist_sq = 0;
    double deficit = 0;
    std::optional<double> E; // empty when u is numerically on the manifold
};

inline DeficitReport deficit_report(const Context& ctx, const HarmonicFunction& u) {
    DeficitReport r;
    r.grad_sq = grad_norm_sq(ctx, u);
    r.star = star_norm(ctx, u);
    const MValue m = m_of(ctx, u);
    r.m_value = m.value;
    r.m_argmax = m.argmax;
    r.m_boundary = m.boundary;
    const double S = ctx.consts().S_ab;
    r.dist_sq = std::max(0.0, r.grad_sq - S * m.value);
    r.deficit = r.grad_sq - S * r.star * r.star;
    if (r.dist_sq > 1e-12 * r.grad_sq) r.E = r.deficit / r.dist_sq;
    return r;
}

/// The two-bubble test function u^lambda = B + B_lambda as a single radial
/// term (scale hints keep the inner bubble visible to the quadrature).
inline HarmonicFunction two_bubble(const Context& ctx, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw InvalidParams("two_bubble: lambda must lie in (0, 1)");
    HarmonicFunction u(ctx.d());
    u.add_term(0, Parity::Cos, RadialProfile::bubble_b(ctx, 1.0));
    u.add_term(0, Parity::Cos, RadialProfile::bubble_b(ctx, lambda));
    return u;
}

enum class DeficitQuantity { GradSq, StarSq, DistSq, E };

struct ExpansionFit {
    double exponent = 0;
    double coefficient = 0;
    double limit = 0;
    double residual = 0; // rms misfit relative to the data scale
};

namespace detail {

inline double two_bubble_quantity(const Context& ctx, DeficitQuantity which,
                                  double lambda) {
    const HarmonicFunction u = two_bubble(ctx, lambda);
    switch (which) {
        case DeficitQuantity::GradSq: return grad_norm_sq(ctx, u);
        case DeficitQuantity::StarSq: {
            const double s = star_norm(ctx, u);
            return s * s;
        }
        case DeficitQuantity::DistSq: {
            const double d = dist_to_M(ctx, u);
            return d * d;
        }
        case DeficitQuantity::E: {
            const DeficitReport r = deficit_report(ctx, u);
            if (!r.E) throw FitDegenerate("two-bubble function collapsed onto the manifold");
            return *r.E;
        }
    }
    throw InvalidParams("two_bubble_quantity: unknown quantity");
}

} // namespace detail

/**
 * Least-squares fit of quantity(lambda) = limit + coefficient lambda^exponent
 * on a geometric grid, done in log-log differences: successive differences
 * eliminate the limit, their log-log slope is the exponent.
 */
inline ExpansionFit fit_expansion(const Context& ctx, DeficitQuantity which,
                                  std::span<const double> lambda_grid) {
    if (lambda_grid.size() < 6)
        throw InvalidParams("fit_expansion: need at least 6 lambda values");
    std::vector<double> lam(lambda_grid.begin(), lambda_grid.end());
    std::sort(lam.begin(), lam.end(), std::greater<>());
    for (double l : lam)
        if (!(l >= 1e-9 * (1.0 - 1e-9) && l <= 1e-1 * (1.0 + 1e-9)))
            throw InvalidParams("fit_expansion: lambda grid must lie inside [1e-9, 1e-1]");
    const double rho = lam[0] / lam[1];
    for (std::size_t i = 0; i + 1 < lam.size(); ++i)
        if (std::fabs(lam[i] / lam[i + 1] - rho) > 1e-6 * rho)
            throw InvalidParams("fit_expansion: lambda grid must be geometric");

    std::vector<double> y(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i)
        y[i] = detail::two_bubble_quantity(ctx, which, lam[i]);

    double yscale = 0.0;
    for (double v : y) yscale = std::max(yscale, std::fabs(v));
    std::vector<double> diff(lam.size() - 1);
    for (std::size_t i = 0; i + 1 < lam.size(); ++i) {
        diff[i] = y[i] - y[i + 1];
        if (std::fabs(diff[i]) < 1e-10 * yscale)
            throw FitDegenerate("fit_expansion: differences below quadrature noise");
        if (i > 0 && diff[i] * diff[0] <= 0.0)
            throw FitDegenerate("fit_expansion: differences change sign");
    }

    // Slope of log|D_i| against log of the geometric midpoint.
    const std::size_t nd = diff.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < nd; ++i) {
        const double x = 0.5 * (std::log(lam[i]) + std::log(lam[i + 1]));
        const double v = std::log(std::fabs(diff[i]));
        sx += x;
        sy += v;
        sxx += x * x;
        sxy += x * v;
    }
    ExpansionFit fit;
    fit.exponent = (double(nd) * sxy - sx * sy) / (double(nd) * sxx - sx * sx);

    double csum = 0.0;
    for (std::size_t i = 0; i < nd; ++i)
        csum += diff[i] / (std::pow(lam[i], fit.exponent) - std::pow(lam[i + 1], fit.exponent));
    fit.coefficient = csum / double(nd);

    // The limit is read off the smallest lambdas, where the dropped
    // higher-order terms are weakest.
    const std::size_t tail = std::min<std::size_t>(3, lam.size());
    double lsum = 0.0;
    for (std::size_t i = lam.size() - tail; i < lam.size(); ++i)
        lsum += y[i] - fit.coefficient * std::pow(lam[i], fit.exponent);
    fit.limit = lsum / double(tail);

    double rss = 0.0;
    for (std::size_t i = 0; i < lam.size(); ++i) {
        const double model = fit.limit + fit.coefficient * std::pow(lam[i], fit.exponent);
        rss += (y[i] - model) * (y[i] - model);
    }
    fit.residual = std::sqrt(rss / double(lam.size())) / std::max(yscale, 1e-300);
    return fit;
}

/**
 * The flat-direction family u = U + eps Z1 on the symmetry-breaking curve:
 * returns (eps, E(u)) pairs.  E decreases to zero as eps -> 0, the
 * signature of the lost quadratic stability there.  Uses tightened
 * quadrature: the deficit is fourth order in eps.
 */
inline std::vector<std::pair<double, double>> degenerate_sequence(
    const Context& ctx, std::span<const double> eps_list) {
    if (ctx.d().region != Region::OnFS)
        throw InvalidParams("degenerate_sequence: defined on the symmetry-breaking curve only");
    const Context tight = ctx.tightened(1e-12, 1e-15);
    std::vector<std::pair<double, double>> out;
    for (double eps : eps_list) {
        HarmonicFunction u = bubble_U(tight);
        u.add_term(1, Parity::Cos, RadialProfile::kernel_vprime(tight.d().K), eps);
        const DeficitReport r = deficit_report(tight, u);
        if (!r.E) throw NoConvergence("degenerate_sequence: deficit below noise floor");
        out.emplace_back(eps, *r.E);
    }
    return out;
}

} // namespace ckn
