#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Shared helpers for the test suites.  Oracle-style reference values are
// computed here, independent of the library's evaluation paths.

namespace testsup {

/// Euler beta function via lgamma; reference for the half-line bubble
/// integrals: int_0^inf t^{K-1} (1+t^2)^{-K} dt = B(K/2, K/2) / 2.
inline double beta_fn(double x, double y) {
    return std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
}

inline bool rel_close(double got, double want, double tol) {
    return std::fabs(got - want) <= tol * std::max({std::fabs(got), std::fabs(want), 1e-300});
}

/// |got - want| <= tol * max(1, |want|): relative away from zero, absolute
/// near zero.
inline bool mixed_close(double got, double want, double tol) {
    return std::fabs(got - want) <= tol * std::max(1.0, std::fabs(want));
}

/// Deterministic uniform doubles in [0, 1); avoids the implementation-defined
/// std::uniform_real_distribution so sequences match across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform() {
        return double(eng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) { // inclusive
        return lo + int(uniform() * double(hi - lo + 1));
    }

private:
    std::mt19937_64 eng_;
};

} // namespace testsup
