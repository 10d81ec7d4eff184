#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ckn/errors.hpp"
#include "ckn/numerics.hpp"
#include "ckn/params.hpp"

namespace ckn {

// ---------------------------------------------------------------------------
// Parameter context: derived algebra plus the bubble constants every norm
// computation needs.  Immutable after construction.

/// Closed-form constants attached to one (a, b) pair.
struct BubbleConstants {
    double c_ab = 0;     // amplitude making ||B||_* = 1
    double S_ab = 0;     // best constant S_{a,b} = ||U||^{2 - 4/q}
    double normU_sq = 0; // ||U||^2 = int |x|^{-qb} U^q dx
    double d_ab = 0;     // int |x|^{-qb} B^{q-1} dx
};

class Context;

namespace detail {
double bubble_star_q_quadrature(const Context& ctx); // defined after Context
}

class Context {
public:
    explicit Context(const ParamPoint& p, const QuadConfig& quad = {})
        : d_(derive(p)), quad_(quad) {
        const double K = d_.K, tau = d_.tau, q = d_.q;
        const double lg_half = std::lgamma(K / 2.0);
        const double lg_full = std::lgamma(K);
        const double ln_star_unit = std::log(M_PI) + std::log(tau) + 2.0 * lg_half - lg_full;
        k_.c_ab = std::exp(-ln_star_unit / q);
        k_.normU_sq = std::exp(std::log(M_PI) + (1.0 - K) * std::log(tau) +
                               (K / 2.0) * std::log(K * (K - 2.0)) + 2.0 * lg_half - lg_full);
        k_.S_ab = std::pow(k_.normU_sq, 2.0 / K);
        k_.d_ab = 2.0 * M_PI * tau * std::pow(k_.c_ab, q - 1.0) / K;
        if (!std::isfinite(d_.C_ab) || !std::isfinite(k_.c_ab) || !std::isfinite(k_.S_ab) ||
            !std::isfinite(k_.normU_sq))
            throw InvalidParams("Context: bubble constants overflow at these parameters "
                                "(K too large for double precision)");
        self_check();
    }

    const DerivedParams& d() const { return d_; }
    const BubbleConstants& consts() const { return k_; }
    const QuadConfig& quad() const { return quad_; }

    /// Same parameters with tighter quadrature tolerances.
    Context tightened(double rel, double abs) const {
        Context c = *this;
        c.quad_ = quad_.tightened(rel, abs);
        return c;
    }

    /// Fault injection for the self-verification harness: returns a context
    /// whose bubble amplitude is corrupted by `factor`.  Skips the
    /// construction-time consistency check so the corruption can propagate.
    Context with_perturbed_c_ab(double factor) const {
        Context c = *this;
        c.k_.c_ab *= factor;
        c.k_.d_ab *= std::pow(factor, d_.q - 1.0);
        return c;
    }

private:
    void self_check() const;

    DerivedParams d_;
    BubbleConstants k_;
    QuadConfig quad_;
};

// ---------------------------------------------------------------------------
// Radial profiles in the transformed variable t (r = t^tau).

enum class ProfileKind { BubbleV, BubbleU, BubbleB, KernelEta0, KernelVprime, PowerBump, Grid, Combo };

/**
 * A radial factor eta(t) with declared power-law endpoint behavior.
 * Closed-form kinds evaluate exactly; Grid kinds interpolate (cubic Hermite
 * in log t, shape-preserving slopes by default) and extrapolate with the
 * declared tail exponents.  Combo holds a linear combination.
 *
 * Tail convention: value ~ t^{alpha0} as t -> 0+, ~ t^{-alpha_inf} as
 * t -> inf.  alpha0 = 0 means a finite limit with an even expansion, so the
 * derivative then vanishes linearly at the origin.
 */
class RadialProfile {
public:
    static RadialProfile bubble_v(double K) {
        const double amp = std::pow(K * (K - 2.0), (K - 2.0) / 4.0);
        return power(ProfileKind::BubbleV, amp, 0.0, (K - 2.0) / 2.0, 1.0, K);
    }

    /// Extremal bubble U_lambda in t-coordinates:
    /// eta(t) = C_ab zeta^{(K-2)/2} (1 + (zeta t)^2)^{-(K-2)/2}, zeta = lambda^{1/tau}.
    static RadialProfile bubble_u(const Context& ctx, double lambda = 1.0) {
        return scaled_bubble(ProfileKind::BubbleU, ctx, ctx.d().C_ab, lambda);
    }

    /// ||.||_*-normalized bubble B_lambda.
    static RadialProfile bubble_b(const Context& ctx, double lambda = 1.0) {
        return scaled_bubble(ProfileKind::BubbleB, ctx, ctx.consts().c_ab, lambda);
    }

    /// eta0(t) = (1 - t^2) / (1 + t^2)^{K/2}: the dilation direction.
    static RadialProfile kernel_eta0(double K) {
        RadialProfile p;
        p.kind_ = ProfileKind::KernelEta0;
        p.K_ = K;
        p.amp_ = 1.0;
        p.zeta_ = 1.0;
        p.tails_ = {0.0, K - 2.0};
        return p;
    }

    /// Unit V'-shape t / (1 + t^2)^{K/2}: radial factor of the k = 1 kernel.
    static RadialProfile kernel_vprime(double K) {
        return power(ProfileKind::KernelVprime, 1.0, 1.0, K / 2.0, 1.0, K);
    }

    /// Generic closed-form bump amp (zeta t)^p (1 + (zeta t)^2)^{-beta}.
    static RadialProfile power_bump(double amp, double p, double beta, double zeta = 1.0) {
        return power(ProfileKind::PowerBump, amp, p, beta, zeta, 0.0);
    }

    /// Interpolating profile on ascending t nodes.
    static RadialProfile grid(std::vector<double> t_nodes, std::vector<double> values,
                              TailSpec tails) {
        if (t_nodes.size() != values.size() || t_nodes.size() < 4)
            throw InvalidParams("RadialProfile::grid: need >= 4 matching nodes/values");
        std::vector<double> s(t_nodes.size());
        for (std::size_t i = 0; i < t_nodes.size(); ++i) {
            if (!(t_nodes[i] > 0.0) || (i && !(t_nodes[i] > t_nodes[i - 1])))
                throw InvalidParams("RadialProfile::grid: nodes must be positive increasing");
            s[i] = std::log(t_nodes[i]);
        }
        RadialProfile p;
        p.kind_ = ProfileKind::Grid;
        p.s_ = std::move(s);
        p.v_ = std::move(values);
        p.slope_ = fritsch_carlson_slopes(p.s_, p.v_);
        p.tails_ = tails;
        return p;
    }

    /// Grid profile with caller-supplied d(value)/d(ln t) node slopes.
    static RadialProfile grid_with_slopes(std::vector<double> s_nodes,
                                          std::vector<double> values,
                                          std::vector<double> slopes, TailSpec tails) {
        RadialProfile p;
        p.kind_ = ProfileKind::Grid;
        p.s_ = std::move(s_nodes);
        p.v_ = std::move(values);
        p.slope_ = std::move(slopes);
        p.tails_ = tails;
        return p;
    }

    static RadialProfile combo(std::vector<std::pair<double, RadialProfile>> parts) {
        if (parts.empty()) throw InvalidParams("RadialProfile::combo: empty");
        if (parts.size() == 1 && parts[0].first == 1.0) return std::move(parts[0].second);
        RadialProfile p;
        p.kind_ = ProfileKind::Combo;
        p.tails_ = {1e300, 1e300};
        for (auto& [c, part] : parts) {
            p.tails_.alpha0 = std::min(p.tails_.alpha0, part.tails_.alpha0);
            p.tails_.alpha_inf = std::min(p.tails_.alpha_inf, part.tails_.alpha_inf);
        }
        p.parts_ = std::move(parts);
        return p;
    }

    RadialProfile scaled(double c) const {
        if (kind_ == ProfileKind::Combo) {
            auto parts = parts_;
            for (auto& [w, p] : parts) w *= c;
            return combo(std::move(parts));
        }
        if (kind_ == ProfileKind::Grid) {
            RadialProfile p = *this;
            for (auto& v : p.v_) v *= c;
            for (auto& m : p.slope_) m *= c;
            return p;
        }
        RadialProfile p = *this;
        p.amp_ *= c;
        return p;
    }

    /// The dilation u -> lambda^{-a} u(lambda x) realized in t-coordinates:
    /// eta -> zeta^{(K-2)/2} eta(zeta t) with zeta = lambda^{1/tau}.
    RadialProfile dilated(const DerivedParams& d, double lambda) const {
        const double zeta = std::pow(lambda, 1.0 / d.tau);
        const double gain = std::pow(zeta, (d.K - 2.0) / 2.0);
        return dilated_zeta(zeta, gain);
    }

    ProfileKind kind() const { return kind_; }
    const TailSpec& tails() const { return tails_; }

    /// Derivative exponent at t -> 0 under the even-expansion convention.
    double deriv_alpha0() const {
        return tails_.alpha0 == 0.0 ? 1.0 : tails_.alpha0 - 1.0;
    }

    double value(double t) const {
        switch (kind_) {
            case ProfileKind::KernelEta0: {
                const double z = zeta_ * t, z2 = z * z;
                return amp_ * (1.0 - z2) * std::pow(1.0 + z2, -0.5 * K_);
            }
            case ProfileKind::Grid:
                return grid_value(t);
            case ProfileKind::Combo: {
                double sum = 0.0;
                for (const auto& [c, p] : parts_) sum += c * p.value(t);
                return sum;
            }
            default: { // power family
                const double z = zeta_ * t;
                const double zp = p_ == 0.0 ? 1.0 : std::pow(z, p_);
                return amp_ * zp * std::pow(1.0 + z * z, -beta_);
            }
        }
    }

    double deriv(double t) const {
        switch (kind_) {
            case ProfileKind::KernelEta0: {
                const double z = zeta_ * t, z2 = z * z;
                return -amp_ * zeta_ * z * std::pow(1.0 + z2, -0.5 * K_ - 1.0) *
                       ((K_ + 2.0) - (K_ - 2.0) * z2);
            }
            case ProfileKind::Grid:
                return grid_deriv(t);
            case ProfileKind::Combo: {
                double sum = 0.0;
                for (const auto& [c, p] : parts_) sum += c * p.deriv(t);
                return sum;
            }
            default: {
                const double z = zeta_ * t, z2 = z * z;
                const double common = std::pow(1.0 + z2, -beta_ - 1.0);
                if (p_ == 0.0) return -2.0 * beta_ * amp_ * zeta_ * z * common;
                return amp_ * zeta_ * std::pow(z, p_ - 1.0) * common *
                       (p_ * (1.0 + z2) - 2.0 * beta_ * z2);
            }
        }
    }

    double deriv2(double t) const {
        switch (kind_) {
            case ProfileKind::KernelEta0: {
                const double z = zeta_ * t, x = z * z;
                return amp_ * zeta_ * zeta_ * std::pow(1.0 + x, -0.5 * K_ - 2.0) *
                       (-(K_ + 2.0) + (K_ * K_ + 6.0 * K_ - 4.0) * x -
                        (K_ - 2.0) * (K_ - 1.0) * x * x);
            }
            case ProfileKind::Combo: {
                double sum = 0.0;
                for (const auto& [c, p] : parts_) sum += c * p.deriv2(t);
                return sum;
            }
            case ProfileKind::Grid: {
                const double h = 3e-5 * t; // interpolants carry no exact curvature
                return (deriv(t + h) - deriv(t - h)) / (2.0 * h);
            }
            default: {
                const double z = zeta_ * t, x = z * z;
                const double common = std::pow(1.0 + x, -beta_ - 2.0);
                const double c = p_ - 2.0 * beta_;
                if (p_ == 0.0)
                    return amp_ * zeta_ * zeta_ * common *
                           (-2.0 * beta_ + 2.0 * beta_ * (2.0 * beta_ + 1.0) * x);
                const double brace =
                    p_ * (p_ - 1.0) +
                    (2.0 * p_ * p_ - 4.0 * p_ * beta_ - 2.0 * p_ - 2.0 * beta_) * x +
                    c * (c - 1.0) * x * x;
                return amp_ * zeta_ * zeta_ * std::pow(z, p_ - 2.0) * common * brace;
            }
        }
    }

    void collect_scale_hints(std::vector<double>& out) const {
        switch (kind_) {
            case ProfileKind::Combo:
                for (const auto& [c, p] : parts_) p.collect_scale_hints(out);
                break;
            case ProfileKind::Grid:
                break;
            default:
                out.push_back(1.0 / zeta_);
        }
    }

    /// Log-t nodes of the densest participating grid, or nullptr.
    const std::vector<double>* grid_s_nodes() const {
        if (kind_ == ProfileKind::Grid) return &s_;
        if (kind_ == ProfileKind::Combo) {
            const std::vector<double>* best = nullptr;
            for (const auto& [c, p] : parts_) {
                const auto* g = p.grid_s_nodes();
                if (g && (!best || g->size() > best->size())) best = g;
            }
            return best;
        }
        return nullptr;
    }

private:
    static RadialProfile power(ProfileKind kind, double amp, double p, double beta,
                               double zeta, double K) {
        RadialProfile out;
        out.kind_ = kind;
        out.amp_ = amp;
        out.p_ = p;
        out.beta_ = beta;
        out.zeta_ = zeta;
        out.K_ = K;
        out.tails_ = {p, 2.0 * beta - p};
        return out;
    }

    static RadialProfile scaled_bubble(ProfileKind kind, const Context& ctx, double amp,
                                       double lambda) {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw InvalidParams("bubble: scale lambda must be positive");
        const double K = ctx.d().K;
        const double zeta = std::pow(lambda, 1.0 / ctx.d().tau);
        const double m = (K - 2.0) / 2.0;
        return power(kind, amp * std::pow(zeta, m), 0.0, m, zeta, K);
    }

    RadialProfile dilated_zeta(double zeta, double gain) const {
        switch (kind_) {
            case ProfileKind::Combo: {
                auto parts = parts_;
                for (auto& [c, p] : parts) p = p.dilated_zeta(zeta, 1.0), c *= gain;
                return combo(std::move(parts));
            }
            case ProfileKind::Grid: {
                RadialProfile p = *this;
                const double shift = std::log(zeta);
                for (auto& s : p.s_) s -= shift;
                for (auto& v : p.v_) v *= gain;
                for (auto& m : p.slope_) m *= gain;
                return p;
            }
            default: {
                RadialProfile p = *this;
                p.zeta_ *= zeta;
                p.amp_ *= gain;
                return p;
            }
        }
    }

    static std::vector<double> fritsch_carlson_slopes(const std::vector<double>& s,
                                                      const std::vector<double>& v) {
        const std::size_t n = s.size();
        std::vector<double> h(n - 1), delta(n - 1), m(n);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = s[i + 1] - s[i];
            delta[i] = (v[i + 1] - v[i]) / h[i];
        }
        auto endpoint = [](double h0, double h1, double d0, double d1) {
            double m0 = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if (m0 * d0 <= 0.0) return 0.0;
            if (std::fabs(m0) > 3.0 * std::fabs(d0)) return 3.0 * d0;
            return m0;
        };
        m[0] = endpoint(h[0], h[1], delta[0], delta[1]);
        m[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) {
                m[i] = 0.0;
            } else {
                const double w1 = 2.0 * h[i] + h[i - 1];
                const double w2 = h[i] + 2.0 * h[i - 1];
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        return m;
    }

    double grid_value(double t) const {
        const double s = std::log(t);
        if (s <= s_.front()) {
            return v_.front() * std::exp(tails_.alpha0 * (s - s_.front()));
        }
        if (s >= s_.back()) {
            return v_.back() * std::exp(-tails_.alpha_inf * (s - s_.back()));
        }
        const auto [i, x, h] = locate(s);
        const double x2 = x * x, x3 = x2 * x;
        return (2.0 * x3 - 3.0 * x2 + 1.0) * v_[i] + (x3 - 2.0 * x2 + x) * h * slope_[i] +
               (-2.0 * x3 + 3.0 * x2) * v_[i + 1] + (x3 - x2) * h * slope_[i + 1];
    }

    double grid_deriv(double t) const {
        const double s = std::log(t);
        if (s <= s_.front()) {
            if (tails_.alpha0 != 0.0) return tails_.alpha0 * grid_value(t) / t;
            // finite limit with even expansion: derivative dies off linearly
            const double d0 = slope_.front() / std::exp(s_.front());
            return d0 * (t / std::exp(s_.front()));
        }
        if (s >= s_.back()) return -tails_.alpha_inf * grid_value(t) / t;
        const auto [i, x, h] = locate(s);
        const double x2 = x * x;
        const double dvdx = (6.0 * x2 - 6.0 * x) * (v_[i] - v_[i + 1]) +
                            (3.0 * x2 - 4.0 * x + 1.0) * h * slope_[i] +
                            (3.0 * x2 - 2.0 * x) * h * slope_[i + 1];
        return dvdx / h / t;
    }

    struct Loc {
        std::size_t i;
        double x, h;
    };
    Loc locate(double s) const {
        std::size_t lo = 0, hi = s_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (s_[mid] <= s ? lo : hi) = mid;
        }
        const double h = s_[lo + 1] - s_[lo];
        return {lo, (s - s_[lo]) / h, h};
    }

    ProfileKind kind_ = ProfileKind::PowerBump;
    double amp_ = 1.0, p_ = 0.0, beta_ = 1.0, zeta_ = 1.0, K_ = 0.0;
    std::vector<double> s_, v_, slope_;
    std::vector<std::pair<double, RadialProfile>> parts_;
    TailSpec tails_{0.0, 2.0};
};

// ---------------------------------------------------------------------------
// Harmonic functions: finite sums of radial profiles times cos/sin modes.

enum class Parity { Cos, Sin };

struct HarmonicTerm {
    int k = 0;
    Parity parity = Parity::Cos;
    RadialProfile profile;
};

class HarmonicFunction {
public:
    explicit HarmonicFunction(const DerivedParams& d) : d_(d) {}

    /// Adds coef * profile on mode (k, parity), merging with an existing
    /// term on the same mode.  Enforces the endpoint conditions: k = 0
    /// radial factors have vanishing derivative at t = 0, k >= 1 factors
    /// vanish there.
    HarmonicFunction& add_term(int k, Parity parity, RadialProfile profile, double coef = 1.0) {
        if (k < 0) throw InvalidParams("HarmonicFunction: k must be >= 0");
        const double a0 = profile.tails().alpha0;
        if (k == 0 && !(a0 == 0.0 || a0 > 1.0))
            throw InvalidParams("HarmonicFunction: k = 0 radial factor must have eta'(0) = 0");
        if (k >= 1 && !(a0 > 0.0))
            throw InvalidParams("HarmonicFunction: k >= 1 radial factor must vanish at t = 0");
        const Parity par = k == 0 ? Parity::Cos : parity;
        for (auto& term : terms_) {
            if (term.k == k && term.parity == par) {
                term.profile = RadialProfile::combo(
                    {{1.0, std::move(term.profile)}, {coef, std::move(profile)}});
                return *this;
            }
        }
        terms_.push_back({k, par, coef == 1.0 ? std::move(profile) : profile.scaled(coef)});
        return *this;
    }

    const std::vector<HarmonicTerm>& terms() const { return terms_; }
    const DerivedParams& params() const { return d_; }

    bool purely_radial() const {
        for (const auto& t : terms_)
            if (t.k != 0) return false;
        return true;
    }

    const RadialProfile* radial_part() const {
        for (const auto& t : terms_)
            if (t.k == 0) return &t.profile;
        return nullptr;
    }

    double value(double t, double theta) const {
        double sum = 0.0;
        for (const auto& term : terms_) {
            const double ang = term.k == 0 ? 1.0
                               : term.parity == Parity::Cos ? std::cos(term.k * theta)
                                                            : std::sin(term.k * theta);
            sum += term.profile.value(t) * ang;
        }
        return sum;
    }

    HarmonicFunction scaled(double c) const {
        HarmonicFunction out(d_);
        for (const auto& t : terms_) out.terms_.push_back({t.k, t.parity, t.profile.scaled(c)});
        return out;
    }

    HarmonicFunction dilated(double lambda) const {
        HarmonicFunction out(d_);
        for (const auto& t : terms_)
            out.terms_.push_back({t.k, t.parity, t.profile.dilated(d_, lambda)});
        return out;
    }

private:
    DerivedParams d_;
    std::vector<HarmonicTerm> terms_;
};

// ---------------------------------------------------------------------------
// Integration plumbing shared by the norms.

namespace detail {

inline constexpr double kGL7Nodes[7] = {
    -0.949107912342759, -0.741531185599394, -0.405845151377397, 0.0,
    0.405845151377397,  0.741531185599394,  0.949107912342759};
inline constexpr double kGL7Weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

struct IntegrandInfo {
    TailSpec tails;
    std::vector<double> splits;                  // t-coordinates seeding subdivision
    const std::vector<double>* grid_s = nullptr; // cells to integrate exactly
};

inline void add_scale_splits(IntegrandInfo& info, std::vector<double> scales) {
    std::sort(scales.begin(), scales.end());
    scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
    for (std::size_t i = 0; i < scales.size(); ++i) {
        info.splits.push_back(scales[i]);
        if (i + 1 < scales.size() && scales[i + 1] / scales[i] > 4.0)
            info.splits.push_back(std::sqrt(scales[i] * scales[i + 1]));
    }
}

inline IntegrandInfo integrand_info(std::initializer_list<const RadialProfile*> profiles) {
    IntegrandInfo info;
    std::vector<double> scales;
    for (const auto* p : profiles) {
        p->collect_scale_hints(scales);
        const auto* g = p->grid_s_nodes();
        if (g && (!info.grid_s || g->size() > info.grid_s->size())) info.grid_s = g;
    }
    add_scale_splits(info, std::move(scales));
    return info;
}

/// Integrate f over (0, inf).  When a grid participates, its cells are
/// integrated with a fixed 7-point Gauss rule (the interpolant is cubic per
/// cell) and the two tail pieces adaptively; otherwise one adaptive pass.
template <class F>
double integrate_info(F&& f, const IntegrandInfo& info, const QuadConfig& cfg) {
    if (!info.grid_s)
        return integrate_halfline(f, info.tails, cfg,
                                  std::span<const double>(info.splits));
    const auto& sn = *info.grid_s;
    double cells = 0.0;
    for (std::size_t i = 0; i + 1 < sn.size(); ++i) {
        const double mid = 0.5 * (sn[i] + sn[i + 1]);
        const double half = 0.5 * (sn[i + 1] - sn[i]);
        double acc = 0.0;
        for (int j = 0; j < 7; ++j) {
            const double s = mid + half * kGL7Nodes[j];
            const double t = std::exp(s);
            acc += kGL7Weights[j] * f(t) * t; // dt = t ds
        }
        cells += acc * half;
    }
    QuadConfig tail_cfg = cfg;
    tail_cfg.abs_tol = std::max(cfg.abs_tol, 0.1 * cfg.rel_tol * std::fabs(cells));
    const double t_lo = std::exp(sn.front()), t_hi = std::exp(sn.back());
    return cells + integrate_range(f, 0.0, t_lo, tail_cfg) +
           integrate_range(f, t_hi, std::numeric_limits<double>::infinity(), tail_cfg);
}

inline double mode_weight(int k) { return k == 0 ? 2.0 * M_PI : M_PI; }

} // namespace detail

// ---------------------------------------------------------------------------
// Norms and inner products.

/// ||u||^2 = int |x|^{-2a} |grad u|^2 dx, assembled mode by mode:
/// c_k [ tau^{-1} int eta'^2 t^{K-1} dt + tau k^2 int eta^2 t^{K-3} dt ].
inline double grad_norm_sq(const Context& ctx, const HarmonicFunction& u) {
    const double K = ctx.d().K, tau = ctx.d().tau;
    double total = 0.0;
    for (const auto& term : u.terms()) {
        const auto& pr = term.profile;
        auto info = detail::integrand_info({&pr});
        info.tails = {2.0 * pr.deriv_alpha0() + K - 1.0,
                      2.0 * (pr.tails().alpha_inf + 1.0) - (K - 1.0)};
        const double grad_part = detail::integrate_info(
            [&](double t) {
                const double d = pr.deriv(t);
                return d * d * std::pow(t, K - 1.0);
            },
            info, ctx.quad());
        double ang_part = 0.0;
        if (term.k > 0) {
            auto info2 = detail::integrand_info({&pr});
            info2.tails = {2.0 * pr.tails().alpha0 + K - 3.0,
                           2.0 * pr.tails().alpha_inf - (K - 3.0)};
            ang_part = detail::integrate_info(
                [&](double t) {
                    const double v = pr.value(t);
                    return v * v * std::pow(t, K - 3.0);
                },
                info2, ctx.quad());
        }
        total += detail::mode_weight(term.k) *
                 (grad_part / tau + tau * double(term.k) * double(term.k) * ang_part);
    }
    return total;
}

/// D-inner product <u, v>; only matching (k, parity) modes pair.
inline double inner_product_grad(const Context& ctx, const HarmonicFunction& u,
                                 const HarmonicFunction& v) {
    const double K = ctx.d().K, tau = ctx.d().tau;
    double total = 0.0;
    for (const auto& tu : u.terms()) {
        for (const auto& tv : v.terms()) {
            if (tu.k != tv.k || tu.parity != tv.parity) continue;
            const auto& pu = tu.profile;
            const auto& pv = tv.profile;
            auto info = detail::integrand_info({&pu, &pv});
            info.tails = {pu.deriv_alpha0() + pv.deriv_alpha0() + K - 1.0,
                          pu.tails().alpha_inf + pv.tails().alpha_inf + 2.0 - (K - 1.0)};
            const double grad_part = detail::integrate_info(
                [&](double t) { return pu.deriv(t) * pv.deriv(t) * std::pow(t, K - 1.0); },
                info, ctx.quad());
            double ang_part = 0.0;
            if (tu.k > 0) {
                auto info2 = detail::integrand_info({&pu, &pv});
                info2.tails = {pu.tails().alpha0 + pv.tails().alpha0 + K - 3.0,
                               pu.tails().alpha_inf + pv.tails().alpha_inf - (K - 3.0)};
                ang_part = detail::integrate_info(
                    [&](double t) { return pu.value(t) * pv.value(t) * std::pow(t, K - 3.0); },
                    info2, ctx.quad());
            }
            total += detail::mode_weight(tu.k) *
                     (grad_part / tau + tau * double(tu.k) * double(tu.k) * ang_part);
        }
    }
    return total;
}

/// int |x|^{-qb} |u|^q dx.
inline double star_norm_q(const Context& ctx, const HarmonicFunction& u) {
    const double K = ctx.d().K, tau = ctx.d().tau, q = ctx.d().q;
    if (u.terms().empty()) return 0.0;

    double p0 = 1e300, pinf = 1e300;
    std::vector<const RadialProfile*> prs;
    for (const auto& term : u.terms()) {
        prs.push_back(&term.profile);
        p0 = std::min(p0, term.profile.tails().alpha0);
        pinf = std::min(pinf, term.profile.tails().alpha_inf);
    }
    detail::IntegrandInfo info;
    {
        std::vector<double> scales;
        for (const auto* p : prs) {
            p->collect_scale_hints(scales);
            const auto* g = p->grid_s_nodes();
            if (g && (!info.grid_s || g->size() > info.grid_s->size())) info.grid_s = g;
        }
        detail::add_scale_splits(info, std::move(scales));
    }
    info.tails = {q * p0 + K - 1.0, q * pinf - (K - 1.0)};

    if (u.purely_radial()) {
        const auto* pr = u.radial_part();
        const double integral = detail::integrate_info(
            [&](double t) { return std::pow(std::fabs(pr->value(t)), q) * std::pow(t, K - 1.0); },
            info, ctx.quad());
        return 2.0 * M_PI * tau * integral;
    }

    // Tensorized rule: adaptive (or cell-exact) radial pass of the angular
    // average, the average itself by trapezoid node-doubling (spectrally
    // accurate for these periodic integrands).
    const double theta_tol = std::min(1e-9, 10.0 * ctx.quad().rel_tol);
    auto theta_integral = [&](double t) {
        std::vector<double> radial(u.terms().size());
        for (std::size_t i = 0; i < u.terms().size(); ++i)
            radial[i] = u.terms()[i].profile.value(t);
        auto mean_offset = [&](int n, double offset) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                const double theta = (2.0 * M_PI) * (j + offset) / n;
                double val = 0.0;
                for (std::size_t i = 0; i < u.terms().size(); ++i) {
                    const auto& term = u.terms()[i];
                    const double ang = term.k == 0 ? 1.0
                                       : term.parity == Parity::Cos
                                           ? std::cos(term.k * theta)
                                           : std::sin(term.k * theta);
                    val += radial[i] * ang;
                }
                acc += std::pow(std::fabs(val), q);
            }
            return acc / n;
        };
        int n = 16;
        double mean = mean_offset(n, 0.0);
        while (n < (1 << 14)) {
            const double refined = 0.5 * (mean + mean_offset(n, 0.5));
            const bool done = std::fabs(refined - mean) <= theta_tol * std::fabs(refined);
            mean = refined;
            n *= 2;
            if (done) break;
        }
        return 2.0 * M_PI * mean;
    };
    const double integral = detail::integrate_info(
        [&](double t) { return theta_integral(t) * std::pow(t, K - 1.0); }, info, ctx.quad());
    return tau * integral;
}

/// ||u||_* = (int |x|^{-qb} |u|^q dx)^{1/q}.
inline double star_norm(const Context& ctx, const HarmonicFunction& u) {
    return std::pow(star_norm_q(ctx, u), 1.0 / ctx.d().q);
}

struct NormReport {
    double grad_norm_sq = 0;
    double star_norm = 0;
};

inline NormReport norm_report(const Context& ctx, const HarmonicFunction& u) {
    return {grad_norm_sq(ctx, u), star_norm(ctx, u)};
}

/// int |x|^{-qb} U^{q-2} u v dx: per matching mode c_k tau^{-1} int W eta_u eta_v dt
/// with W = K(K-2) t^{K-1} (1+t^2)^{-2}.
inline double weighted_l2_U(const Context& ctx, const HarmonicFunction& u,
                            const HarmonicFunction& v) {
    const double K = ctx.d().K, tau = ctx.d().tau;
    double total = 0.0;
    for (const auto& tu : u.terms()) {
        for (const auto& tv : v.terms()) {
            if (tu.k != tv.k || tu.parity != tv.parity) continue;
            const auto& pu = tu.profile;
            const auto& pv = tv.profile;
            auto info = detail::integrand_info({&pu, &pv});
            info.tails = {pu.tails().alpha0 + pv.tails().alpha0 + K - 1.0,
                          pu.tails().alpha_inf + pv.tails().alpha_inf + 4.0 - (K - 1.0)};
            const double integral = detail::integrate_info(
                [&](double t) {
                    const double w = K * (K - 2.0) * std::pow(t, K - 1.0) /
                                     ((1.0 + t * t) * (1.0 + t * t));
                    return w * pu.value(t) * pv.value(t);
                },
                info, ctx.quad());
            total += detail::mode_weight(tu.k) * integral / tau;
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Bubble factories at the function level, constants, and residuals.

inline HarmonicFunction bubble_U(const Context& ctx, double lambda = 1.0) {
    HarmonicFunction u(ctx.d());
    u.add_term(0, Parity::Cos, RadialProfile::bubble_u(ctx, lambda));
    return u;
}

inline HarmonicFunction normalized_bubble_B(const Context& ctx, double lambda = 1.0) {
    HarmonicFunction u(ctx.d());
    u.add_term(0, Parity::Cos, RadialProfile::bubble_b(ctx, lambda));
    return u;
}

/// Best constant S_{a,b} = ||U||^{2-4/q}; only defined where the radial
/// bubble is the extremal (at or above the symmetry-breaking curve).
inline double best_constant_S(const Context& ctx) {
    if (ctx.d().region == Region::BelowFS)
        throw InvalidParams("best_constant_S: radial bubble is not extremal below b_FS(a)");
    return ctx.consts().S_ab;
}

/// Solutions of the linearized problem as harmonic functions: the dilation
/// direction Z0 always, plus the two k = 1 elements exactly on the curve.
inline std::vector<HarmonicFunction> kernel_elements(const Context& ctx) {
    const auto& d = ctx.d();
    if (d.region == Region::BelowFS)
        throw InvalidParams("kernel_elements: defined for b >= b_FS(a)");
    std::vector<HarmonicFunction> out;
    HarmonicFunction z0(d);
    z0.add_term(0, Parity::Cos, RadialProfile::kernel_eta0(d.K));
    out.push_back(std::move(z0));
    if (d.region == Region::OnFS) {
        HarmonicFunction z1(d), z2(d);
        z1.add_term(1, Parity::Cos, RadialProfile::kernel_vprime(d.K));
        z2.add_term(1, Parity::Sin, RadialProfile::kernel_vprime(d.K));
        out.push_back(std::move(z1));
        out.push_back(std::move(z2));
    }
    return out;
}

/// d_{a,b} = int |x|^{-qb} B^{q-1} dx, computed by quadrature (the closed
/// Beta form lives in the context constants and is cross-checked in tests).
inline double overlap_d(const Context& ctx) {
    const double K = ctx.d().K, tau = ctx.d().tau, q = ctx.d().q;
    const RadialProfile b = RadialProfile::bubble_b(ctx);
    auto info = detail::integrand_info({&b});
    info.tails = {K - 1.0, 3.0}; // B^{q-1} ~ t^{-(K+2)}
    const double integral = detail::integrate_info(
        [&](double t) { return std::pow(b.value(t), q - 1.0) * std::pow(t, K - 1.0); }, info,
        ctx.quad());
    return 2.0 * M_PI * tau * integral;
}

/**
 * Maximum relative residual of the defining ODE over a 200-point log grid
 * t in [1e-3, 1e3].  Bubbles are checked against the transformed extremal
 * equation, kernel shapes against the linearized operator they annihilate.
 */
inline double pde_residual(const Context& ctx, const RadialProfile& prof) {
    const double K = ctx.d().K, tau = ctx.d().tau, q = ctx.d().q;
    double nonlinear_coef;
    bool linear = false;
    bool with_angular = false;
    switch (prof.kind()) {
        case ProfileKind::BubbleV: nonlinear_coef = 1.0; break;
        case ProfileKind::BubbleU: nonlinear_coef = tau * tau; break;
        case ProfileKind::BubbleB: nonlinear_coef = ctx.consts().S_ab * tau * tau; break;
        case ProfileKind::KernelEta0: linear = true; break;
        case ProfileKind::KernelVprime:
            linear = true;
            with_angular = true;
            break;
        default:
            throw InvalidParams("pde_residual: defined for the closed-form kinds only");
    }
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double t = std::pow(10.0, -3.0 + 6.0 * i / 199.0);
        const double v = prof.value(t);
        const double d1 = prof.deriv(t);
        const double d2 = prof.deriv2(t);
        const double tk = std::pow(t, K - 1.0);
        const double div_term = tk * (d2 + (K - 1.0) * d1 / t);
        double rhs;
        if (linear) {
            rhs = K * (K + 2.0) / ((1.0 + t * t) * (1.0 + t * t)) * tk * v;
            if (with_angular) rhs -= (K - 1.0) * std::pow(t, K - 3.0) * v;
        } else {
            rhs = nonlinear_coef * tk * std::pow(v, q - 1.0);
        }
        const double scale = std::max({std::fabs(div_term), std::fabs(rhs), 1e-300});
        worst = std::max(worst, std::fabs(div_term + rhs) / scale);
    }
    return worst;
}

namespace detail {

inline double bubble_star_q_quadrature(const Context& ctx) {
    const double K = ctx.d().K, tau = ctx.d().tau, q = ctx.d().q;
    const RadialProfile b = RadialProfile::bubble_b(ctx);
    auto f = [&](double t) { return std::pow(b.value(t), q) * std::pow(t, K - 1.0); };
    return 2.0 * M_PI * tau *
           integrate_halfline(f, {K - 1.0, K + 1.0}, ctx.quad());
}

} // namespace detail

inline void Context::self_check() const {
    const double star_q = detail::bubble_star_q_quadrature(*this);
    if (std::fabs(star_q - 1.0) > 1e-8)
        throw Error("Context: bubble normalization self-check failed (||B||_*^q = " +
                    std::to_string(star_q) + ")");
}

} // namespace ckn
