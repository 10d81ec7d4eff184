#pragma once

#include <cmath>
#include <string>

#include "ckn/errors.hpp"
#include "ckn/numerics.hpp"

namespace ckn {

/// The (a, b) parameter pair of the weighted inequality; admissible region
/// is a < 0, a < b < a + 1.
struct ParamPoint {
    double a = -1.0;
    double b = -0.25;
};

enum class Region { BelowFS, OnFS, StrictInterior, AtOrAboveFSStar };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::BelowFS: return "BelowFS";
        case Region::OnFS: return "OnFS";
        case Region::StrictInterior: return "StrictInterior";
        case Region::AtOrAboveFSStar: return "AtOrAboveFSStar";
    }
    return "?";
}

// Classification band for "b sits on the symmetry-breaking curve".  Wide
// enough that six-decimal inputs like b = -0.292893 (2.2e-7 off the exact
// curve value at a = -1) land on the curve; anything this close carries a
// k = 1 level within the kernel-counting tolerance of q - 1 anyway.
inline constexpr double kOnCurveBand = 5e-7;

struct DerivedParams {
    double a = 0, b = 0;
    double q = 0;        // 2 / (b - a)
    double K = 0;        // 2 / (1 + a - b), the transformed dimension
    double tau = 0;      // (a - b) / (a (1 + a - b)), power of the radial substitution
    double C_ab = 0;     // amplitude of the extremal bubble
    double b_fs = 0;     // symmetry-breaking curve at this a
    double b_fs_star = 0;
    Region region = Region::StrictInterior;
};

struct ThresholdSet {
    double k_star = 0; // unique K > 2 where the two upper bounds cross
    double a_star = 0; // largest a for which the crossing lies below b_fs_star
};

inline void validate_params(double a, double b) {
    if (!(a < 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw InvalidParams("params: need a < 0 (got a = " + std::to_string(a) + ")");
    if (!(a < b && b < a + 1.0))
        throw InvalidParams("params: need a < b < a + 1 (got a = " + std::to_string(a) +
                            ", b = " + std::to_string(b) + ")");
}

/// b_FS(a) = a - a / sqrt(a^2 + 1): below this curve the radial bubble is
/// no longer the extremal.
inline double felli_schneider(double a) {
    if (!(a < 0.0)) throw InvalidParams("felli_schneider: need a < 0");
    return a - a / std::sqrt(a * a + 1.0);
}

/// b*_FS(a) = -2a / (-a + sqrt(a^2 + 1)) + a: above it the third eigenvalue
/// switches from the k=1 branch to the third radial branch.
inline double felli_schneider_star(double a) {
    if (!(a < 0.0)) throw InvalidParams("felli_schneider_star: need a < 0");
    return -2.0 * a / (-a + std::sqrt(a * a + 1.0)) + a;
}

inline DerivedParams derive(const ParamPoint& p) {
    validate_params(p.a, p.b);
    DerivedParams d;
    d.a = p.a;
    d.b = p.b;
    d.q = 2.0 / (p.b - p.a);
    d.K = 2.0 / (1.0 + p.a - p.b);
    d.tau = (p.a - p.b) / (p.a * (1.0 + p.a - p.b));
    d.C_ab = std::pow(d.K * (d.K - 2.0) / (d.tau * d.tau), (d.K - 2.0) / 4.0);
    d.b_fs = felli_schneider(p.a);
    d.b_fs_star = felli_schneider_star(p.a);
    if (std::fabs(p.b - d.b_fs) <= kOnCurveBand)
        d.region = Region::OnFS;
    else if (p.b < d.b_fs)
        d.region = Region::BelowFS;
    else if (p.b >= d.b_fs_star)
        d.region = Region::AtOrAboveFSStar;
    else
        d.region = Region::StrictInterior;
    return d;
}

/// Spectral-bound curve f_a(b), the k=1 form of 1 - (q-1)/mu3 valid for
/// b below b*_FS.  Vanishes at b = b_FS(a) and increases in b.
inline double f_curve(double a, double b) {
    validate_params(a, b);
    const double s = std::sqrt(a * a + 1.0);
    const double t = b - a;
    return 1.0 + (a * a / s) * (t - 2.0) / ((s + a) * t * t - a * t);
}

/// Algebraically equivalent form of f_curve written through the
/// (beta, gamma) combination; kept as a cross-check route.
inline double f_curve_alt(double a, double b) {
    validate_params(a, b);
    const double s = std::sqrt(a * a + 1.0);
    const double q = 2.0 / (b - a);
    const double beta = q * (q - 1.0) * a * a / 2.0;
    const double gamma = -(q - 2.0) * a / 2.0;
    return 1.0 - beta / (s * (s + gamma));
}

/// Two-bubble bound curve h_a(b) = 2 - 2^{b-a}, decreasing from 1 to 0 on
/// (a, a+1).
inline double h_curve(double a, double b) {
    validate_params(a, b);
    return 2.0 - std::exp2(b - a);
}

/// Third eigenvalue of the linearized problem in closed form.  Requires
/// b strictly above the symmetry-breaking curve.
inline double mu3_closed(const ParamPoint& p) {
    const DerivedParams d = derive(p);
    if (d.region == Region::BelowFS || d.region == Region::OnFS)
        throw InvalidParams("mu3_closed: defined only for b strictly above b_FS(a)");
    const double s = d.region == Region::AtOrAboveFSStar ? 4.0 / (d.K + 4.0)
                                                         : f_curve(p.a, p.b);
    return (d.q - 1.0) / (1.0 - s);
}

/// Spectral upper bound 1 - (q-1)/mu3 for the stability constant.
inline double stability_upper_bound(const ParamPoint& p) {
    const DerivedParams d = derive(p);
    return 1.0 - (d.q - 1.0) / mu3_closed(p);
}

namespace detail {

inline double b_star_gap(double a, double b) { return f_curve(a, b) - h_curve(a, b); }

} // namespace detail

/**
 * Unique solution of f_a(b) = h_a(b) in (b_FS(a), b*_FS(a)).  f increases
 * from 0 and h decreases, so a single sign change decides everything: when
 * f < h still holds at b*_FS the selection region is empty and NoRoot is
 * thrown (this occurs for a above the threshold a*).
 */
inline double solve_b_star(double a) {
    if (!(a < 0.0)) throw InvalidParams("solve_b_star: need a < 0");
    const double lo = felli_schneider(a) + 1e-8;
    const double hi = felli_schneider_star(a) - 1e-8;
    if (!(detail::b_star_gap(a, hi) >= 0.0))
        throw NoRoot("solve_b_star: selection region is empty for a = " + std::to_string(a));
    return find_root([a](double b) { return detail::b_star_gap(a, b); }, lo, hi, 1e-10);
}

/// Root of the same equation searched over all of (b_FS(a), a+1); always
/// exists by monotonicity.  Used for table output where the in-bracket
/// region may be empty.
inline double solve_b_star_extended(double a) {
    if (!(a < 0.0)) throw InvalidParams("solve_b_star_extended: need a < 0");
    const double lo = felli_schneider(a) + 1e-9 * std::max(1.0, -a);
    const double hi = a + 1.0 - 1e-9 * std::max(1.0, -a);
    return find_root([a](double b) { return detail::b_star_gap(a, b); }, lo, hi, 1e-10);
}

/// K* solving 2 - 2^{(K-2)/K} = 4/(K+4) on (2, inf), and the induced
/// threshold a* = -(K*-2) sqrt(2 K*) / (4 K*).
inline ThresholdSet solve_thresholds() {
    auto g = [](double K) { return 2.0 - std::exp2((K - 2.0) / K) - 4.0 / (K + 4.0); };
    ThresholdSet ts;
    ts.k_star = find_root(g, 3.0, 10.0, 1e-12);
    ts.a_star = -(ts.k_star - 2.0) * std::sqrt(2.0 * ts.k_star) / (4.0 * ts.k_star);
    return ts;
}

} // namespace ckn
