#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ckn/errors.hpp"

namespace ckn {

/// Declared endpoint behavior of an integrand on (0, inf):
/// f(t) ~ t^alpha0 as t -> 0+ and f(t) ~ t^{-alpha_inf} as t -> inf.
struct TailSpec {
    double alpha0 = 0.0;
    double alpha_inf = 2.0;

    bool integrable() const { return alpha0 > -1.0 && alpha_inf > 1.0; }
};

struct QuadConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_refinements = 30;

    QuadConfig tightened(double rel, double abs) const {
        QuadConfig c = *this;
        c.rel_tol = rel;
        c.abs_tol = abs;
        return c;
    }
};

namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss rule on [-1, 1].
inline constexpr double kK15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double kK15Weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kG7Weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct GkEstimate {
    double integral = 0.0;
    double error = 0.0;
};

template <class F>
GkEstimate gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double resk = kK15Weights[7] * f(c);
    double resg = kG7Weights[3] * f(c);
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kK15Nodes[i];
        const double fsum = f(c - dx) + f(c + dx);
        resk += kK15Weights[i] * fsum;
        if (i % 2 == 1) resg += kG7Weights[i / 2] * fsum;
    }
    GkEstimate out;
    out.integral = resk * h;
    // QUADPACK-style inflated error estimate.
    out.error = std::pow(200.0 * std::fabs((resk - resg) * h), 1.5);
    const double scale = std::fabs(resk * h) + 1e-300;
    if (out.error > scale) out.error = std::fabs((resk - resg) * h);
    out.error = std::max(out.error, std::fabs(resk * h) * 1e-15);
    return out;
}

struct Segment {
    double a, b;
    GkEstimate est;
};

/// Globally adaptive bisection on a list of seed segments.
template <class F>
double adaptive_segments(F&& f, std::vector<std::pair<double, double>> seeds,
                         const QuadConfig& cfg) {
    std::vector<Segment> segs;
    segs.reserve(64);
    for (auto [a, b] : seeds)
        if (b > a) segs.push_back({a, b, gk15(f, a, b)});
    if (segs.empty()) return 0.0;

    const std::size_t max_segments =
        std::size_t(64) << std::min(cfg.max_refinements, 14);
    for (;;) {
        double total = 0.0, err = 0.0;
        for (const auto& s : segs) {
            total += s.est.integral;
            err += s.est.error;
        }
        if (err <= std::max(cfg.abs_tol, cfg.rel_tol * std::fabs(total)))
            return total;
        if (segs.size() >= max_segments)
            throw NoConvergence("integrate_halfline: refinement budget exhausted");
        auto worst = std::max_element(
            segs.begin(), segs.end(),
            [](const Segment& x, const Segment& y) { return x.est.error < y.est.error; });
        const double a = worst->a, b = worst->b, m = 0.5 * (a + b);
        if (!(m > a && m < b))
            throw NoConvergence("integrate_halfline: interval too small to split");
        *worst = {a, m, gk15(f, a, m)};
        segs.push_back({m, b, gk15(f, m, b)});
    }
}

// Compactification s = t^2 / (1 + t^2) of (0, inf) onto (0, 1).
inline double s_of_t(double t) { return t * t / (1.0 + t * t); }
inline double t_of_s(double s) { return std::sqrt(s / (1.0 - s)); }
inline double jacobian_dt_ds(double s) {
    return 1.0 / (2.0 * std::sqrt(s) * std::pow(1.0 - s, 1.5));
}

template <class F>
void check_tails(F&& f, const TailSpec& tails) {
    // A two-decade probe span turns an exponent error of delta into a
    // factor 100^delta, so the factor-100 gate catches |delta| > 1.
    auto probe = [&](double t0, double t1, double expo) {
        const double f0 = f(t0), f1 = f(t1);
        if (!(std::isfinite(f0) && std::isfinite(f1)))
            throw BadTails("integrate_halfline: non-finite endpoint sample");
        const double a0 = std::fabs(f0), a1 = std::fabs(f1);
        if (a0 < 1e-280 || a1 < 1e-280) return; // signal too small to judge
        const double predicted = a0 * std::pow(t1 / t0, expo);
        const double ratio = a1 / predicted;
        if (ratio > 100.0 || ratio < 0.01)
            throw BadTails("integrate_halfline: sampled endpoint behavior contradicts TailSpec");
    };
    probe(1e-7, 1e-5, tails.alpha0);
    probe(1e5, 1e7, -tails.alpha_inf);
}

} // namespace detail

/**
 * Integrate f over (0, inf) where f has power-law endpoint behavior per
 * `tails`.  The domain is mapped to (0,1) via s = t^2/(1+t^2) and refined
 * adaptively with a 15-point Kronrod rule.  `split_points` (t-coordinates)
 * seed the initial subdivision; scale-separated integrands must pass the
 * geometric mean of their scales here or the inner scale can be missed.
 */
template <class F>
double integrate_halfline(F&& f, const TailSpec& tails, const QuadConfig& cfg = {},
                          std::span<const double> split_points = {}) {
    if (!tails.integrable())
        throw BadTails("integrate_halfline: declared tails are not integrable");
    detail::check_tails(f, tails);

    auto g = [&f](double s) {
        const double t = detail::t_of_s(s);
        return f(t) * detail::jacobian_dt_ds(s);
    };
    std::vector<double> cuts{0.0, 0.5, 1.0};
    for (double t : split_points)
        if (t > 0.0 && std::isfinite(t)) cuts.push_back(detail::s_of_t(t));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double x, double y) { return std::fabs(x - y) < 1e-14; }),
               cuts.end());
    std::vector<std::pair<double, double>> seeds;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        seeds.emplace_back(cuts[i], cuts[i + 1]);
    return detail::adaptive_segments(g, std::move(seeds), cfg);
}

/// Integrate f over a finite or half-infinite t-range [t_lo, t_hi] (t_hi may
/// be +inf), using the same compactified adaptive scheme.  No tail check.
template <class F>
double integrate_range(F&& f, double t_lo, double t_hi, const QuadConfig& cfg = {}) {
    auto g = [&f](double s) {
        const double t = detail::t_of_s(s);
        return f(t) * detail::jacobian_dt_ds(s);
    };
    const double s_lo = t_lo <= 0.0 ? 0.0 : detail::s_of_t(t_lo);
    const double s_hi = std::isinf(t_hi) ? 1.0 : detail::s_of_t(t_hi);
    if (s_hi <= s_lo) return 0.0;
    std::vector<std::pair<double, double>> seeds{{s_lo, s_hi}};
    return detail::adaptive_segments(g, std::move(seeds), cfg);
}

/**
 * Bracketed scalar root finding: bisection with a secant acceleration step.
 * Requires f(lo) * f(hi) < 0.  Terminates when |f| <= tol or the bracket
 * width falls below tol.
 */
template <class F>
double find_root(F&& f, double lo, double hi, double tol) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (!(flo * fhi < 0.0))
        throw NoBracket("find_root: no sign change over the given bracket");
    for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
        double mid;
        if (iter % 2 == 0) {
            mid = 0.5 * (lo + hi);
        } else {
            mid = lo - flo * (hi - lo) / (fhi - flo); // secant through the bracket
            const double guard = 0.01 * (hi - lo);
            mid = std::clamp(mid, lo + guard, hi - guard);
        }
        const double fm = f(mid);
        if (fm == 0.0 || std::fabs(fm) <= tol * 1e-6) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

struct LogMaxResult {
    double argmax = 1.0;
    double max = 0.0;
    bool interior = false;
};

namespace detail {

/// Golden-section maximization on [a, b]; returns (x, f(x)).
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return f1 > f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

} // namespace detail

/**
 * Maximize f(lambda) for lambda > 0 over log-lambda in [log_lo, log_hi]:
 * a uniform log-scale grid (>= 33 nodes) locates the best cell, golden
 * section refines it.  `interior` is false when the best grid value sits
 * within two cells of a bracket end (supremum escaping to the boundary).
 */
template <class F>
LogMaxResult maximize_log_scale(F&& f, double log_lo, double log_hi, double tol,
                                int grid_nodes = 33) {
    const int n = std::max(grid_nodes, 33);
    auto g = [&f](double s) { return f(std::exp(s)); };
    const double h = (log_hi - log_lo) / (n - 1);
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    double worst_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double v = g(log_lo + i * h);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
        worst_val = std::min(worst_val, v);
    }
    LogMaxResult out;
    if (best_val - worst_val <= 1e-13 * std::max(std::fabs(best_val), 1.0)) {
        out.argmax = std::exp(0.5 * (log_lo + log_hi)); // degenerate flat function
        out.max = best_val;
        out.interior = false;
        return out;
    }
    out.interior = best >= 2 && best <= n - 3;
    const double a = log_lo + std::max(0, best - 1) * h;
    const double b = log_lo + std::min(n - 1, best + 1) * h;
    auto [s_star, f_star] = detail::golden_max(g, a, b, tol);
    if (f_star >= best_val) {
        out.argmax = std::exp(s_star);
        out.max = f_star;
    } else {
        out.argmax = std::exp(log_lo + best * h);
        out.max = best_val;
    }
    return out;
}

} // namespace ckn
