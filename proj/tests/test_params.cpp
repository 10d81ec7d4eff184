#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ckn/params.hpp"
#include "support.hpp"

using namespace ckn;
using testsup::mixed_close;
using testsup::rel_close;
using testsup::Rng;

TEST_CASE("derive: closed-form algebra at (-1, -0.25)") {
    const DerivedParams d = derive({-1.0, -0.25});
    CHECK(d.q == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    CHECK(d.K == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(d.tau == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(d.C_ab == doctest::Approx(std::pow(16.0 / 3.0, 1.5)).epsilon(1e-13));
    CHECK(d.C_ab == doctest::Approx(12.316805).epsilon(1e-6));
    CHECK(d.region == Region::StrictInterior);
}

TEST_CASE("derive: on the symmetry-breaking curve at a = -1") {
    const DerivedParams d = derive({-1.0, -0.2928932});
    CHECK(d.q == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-6));
    CHECK(d.K == doctest::Approx(4.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-6));
    CHECK(d.tau == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-6));
    CHECK(d.tau * d.tau == doctest::Approx(d.K - 1.0).epsilon(1e-6));
    CHECK(d.region == Region::OnFS);
}

TEST_CASE("derive rejects invalid parameter pairs") {
    CHECK_THROWS_AS(derive({-1.0, -1.5}), InvalidParams);
    CHECK_THROWS_AS(derive({0.5, 0.7}), InvalidParams);
    CHECK_THROWS_AS(derive({-1.0, 0.0}), InvalidParams);
    CHECK_THROWS_AS(derive({-1.0, -1.0}), InvalidParams);
}

TEST_CASE("curve values against the printed table") {
    CHECK(std::fabs(felli_schneider(-1.0) - (-0.292893)) < 2e-6);
    CHECK(std::fabs(felli_schneider(-0.5) - (-0.052786)) < 2e-6);
    CHECK(std::fabs(felli_schneider(-10.0) - (-9.004962)) < 2e-6);

    CHECK(std::fabs(felli_schneider_star(-1.0) - (-0.171573)) < 2e-6);
    CHECK(felli_schneider_star(-1.0) ==
          doctest::Approx(2.0 * std::sqrt(2.0) - 3.0).epsilon(1e-14));
    CHECK(std::fabs(felli_schneider_star(-0.8) - (-0.031000)) < 2e-6);
    CHECK(std::fabs(felli_schneider_star(-2.0) - (-1.055728)) < 2e-6);

    CHECK_THROWS_AS(felli_schneider(0.1), InvalidParams);
    CHECK_THROWS_AS(felli_schneider_star(0.0), InvalidParams);
}

TEST_CASE("f curve: anchors and both algebraic forms") {
    // Vanishes on the symmetry-breaking curve.
    CHECK(std::fabs(f_curve(-1.0, felli_schneider(-1.0))) < 1e-10);

    CHECK(f_curve(-1.0, -0.25) == doctest::Approx(0.1008265).epsilon(2e-6));

    // At b*_FS the value is exactly 4/(K+4); at a = -1 this is
    // (10 - 4 sqrt(2)) / 17.
    const double b_star_fs = felli_schneider_star(-1.0);
    const double K = 2.0 / (1.0 - 1.0 - b_star_fs);
    CHECK(f_curve(-1.0, b_star_fs) ==
          doctest::Approx(4.0 / (K + 4.0)).epsilon(1e-12));
    CHECK(f_curve(-1.0, b_star_fs) ==
          doctest::Approx((10.0 - 4.0 * std::sqrt(2.0)) / 17.0).epsilon(1e-12));

    // The two printed algebraic forms agree everywhere in the region.
    Rng rng(20240817);
    for (int i = 0; i < 1000; ++i) {
        const double a = -std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
        const double b = a + rng.uniform(0.02, 0.98);
        CAPTURE(a);
        CAPTURE(b);
        REQUIRE(mixed_close(f_curve(a, b), f_curve_alt(a, b), 1e-12));
    }
}

TEST_CASE("h curve: endpoints and sample value") {
    for (double a : {-0.3, -1.0, -4.0})
        CHECK(std::fabs(h_curve(a, a + 1.0 - 1e-13)) < 1e-12);
    CHECK(h_curve(-1.0, -0.181928) == doctest::Approx(0.2369520).epsilon(1e-6));
    CHECK(h_curve(-1.0, -1.0 + 1e-9) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("curve monotonicity in b") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double a = rng.uniform(-8.0, -0.05);
        double b1 = a + rng.uniform(0.02, 0.98);
        double b2 = a + rng.uniform(0.02, 0.98);
        if (b1 > b2) std::swap(b1, b2);
        if (b2 - b1 < 1e-6) continue;
        REQUIRE(f_curve(a, b1) < f_curve(a, b2));
        REQUIRE(h_curve(a, b1) > h_curve(a, b2));
    }
}

TEST_CASE("curve ordering and region classification over random a") {
    Rng rng(99);
    for (int i = 0; i < 1000; ++i) {
        const double a = -std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
        const double bfs = felli_schneider(a);
        const double bstar = felli_schneider_star(a);
        REQUIRE(a < bfs);
        REQUIRE(bfs < bstar);
        REQUIRE(bstar < a + 1.0);
        REQUIRE(std::fabs(f_curve(a, bfs)) < 1e-10);
        // On-curve classification and the sign change of tau^2 - (K-1).
        REQUIRE(derive({a, bfs}).region == Region::OnFS);
        const double db = 1e-3 * (a + 1.0 - bfs);
        const DerivedParams above = derive({a, bfs + db});
        REQUIRE(above.tau * above.tau > above.K - 1.0);
        if (bfs - db > a) {
            const DerivedParams below = derive({a, bfs - db});
            REQUIRE(below.tau * below.tau < below.K - 1.0);
            REQUIRE(below.region == Region::BelowFS);
        }
    }
}

TEST_CASE("algebraic identities of the derived parameters") {
    Rng rng(31337);
    for (int i = 0; i < 1000; ++i) {
        const double a = -std::exp(rng.uniform(std::log(0.02), std::log(8.0)));
        const double b = a + rng.uniform(0.05, 0.95);
        const DerivedParams d = derive({a, b});
        CAPTURE(a);
        CAPTURE(b);
        REQUIRE(rel_close(d.q, 2.0 * d.K / (d.K - 2.0), 1e-12));
        // tau^2 (q-1) C^{q-2} = K (K+2)
        const double lhs = d.tau * d.tau * (d.q - 1.0) * std::pow(d.C_ab, d.q - 2.0);
        REQUIRE(rel_close(lhs, d.K * (d.K + 2.0), 1e-10));
        if (b >= d.b_fs) REQUIRE(d.tau > 1.0);
    }
}

TEST_CASE("mu3_closed and the spectral upper bound") {
    CHECK(mu3_closed({-1.0, -0.25}) == doctest::Approx(1.8535534).epsilon(1e-5));
    CHECK(mu3_closed({-1.0, -0.1}) == doctest::Approx(22.0 / 15.0).epsilon(1e-12));
    CHECK(stability_upper_bound({-1.0, -0.25}) ==
          doctest::Approx(f_curve(-1.0, -0.25)).epsilon(1e-12));
    CHECK(stability_upper_bound({-1.0, -0.1}) ==
          doctest::Approx(4.0 / 24.0).epsilon(1e-12));

    // Approaching the curve from above the bound collapses to zero.
    const double bfs = felli_schneider(-1.0);
    CHECK(stability_upper_bound({-1.0, bfs + 1e-5}) < 1e-4);
    CHECK_THROWS_AS(mu3_closed({-1.0, bfs}), InvalidParams);
    CHECK_THROWS_AS(mu3_closed({-1.0, bfs - 0.05}), InvalidParams);

    // mu3 > q-1 strictly wherever defined.
    Rng rng(555);
    for (int i = 0; i < 300; ++i) {
        const double a = rng.uniform(-6.0, -0.1);
        const double bfs_a = felli_schneider(a);
        const double b = bfs_a + rng.uniform(1e-4, 0.999) * (a + 1.0 - bfs_a - 1e-6);
        const DerivedParams d = derive({a, b});
        if (d.region == Region::OnFS) continue;
        REQUIRE(mu3_closed({a, b}) > d.q - 1.0);
    }
}

TEST_CASE("mu3_closed: the k=1 closed form matches the shifted-degree formula") {
    // Independent route: with sigma = sqrt((K-2)^2/4 + tau^2) the lowest
    // k = 1 eigenvalue is 4 sigma (sigma + 1) / (K (K-2)).
    Rng rng(4242);
    for (int i = 0; i < 300; ++i) {
        const double a = rng.uniform(-5.0, -0.2);
        const double bfs_a = felli_schneider(a);
        const double bstar_a = felli_schneider_star(a);
        const double b = bfs_a + rng.uniform(0.01, 0.99) * (bstar_a - bfs_a);
        const DerivedParams d = derive({a, b});
        if (d.region != Region::StrictInterior) continue;
        const double half = 0.5 * (d.K - 2.0);
        const double sigma = std::sqrt(half * half + d.tau * d.tau);
        const double mu_shifted = 4.0 * sigma * (sigma + 1.0) / (d.K * (d.K - 2.0));
        REQUIRE(rel_close(mu3_closed({a, b}), mu_shifted, 1e-11));
    }
}

TEST_CASE("solve_b_star: table roots, empty region, and the threshold") {
    CHECK(std::fabs(solve_b_star(-1.0) - (-0.181928)) < 1e-5);
    CHECK(std::fabs(solve_b_star(-0.7) - 0.025795) < 1e-5);
    // Threshold row: the root sits just below b*_FS but is still bracketed.
    CHECK(std::fabs(solve_b_star(-0.641867) - 0.059573) < 1e-5);
    CHECK_THROWS_AS(solve_b_star(-0.5), NoRoot);

    // The extended search always has a root; it agrees with the bracketed
    // one when that exists.
    CHECK(solve_b_star_extended(-1.0) ==
          doctest::Approx(solve_b_star(-1.0)).epsilon(1e-9));
    CHECK(std::fabs(solve_b_star_extended(-0.6) - 0.082212) < 1e-5);

    const ThresholdSet ts = solve_thresholds();
    CHECK(std::fabs(ts.k_star - 6.698818) < 1e-5);
    CHECK(std::fabs(ts.a_star - (-0.641866)) < 1e-5);
    // Defining identity of the threshold, and the induced a* formula.
    CHECK(std::fabs(2.0 - std::exp2((ts.k_star - 2.0) / ts.k_star) -
                    4.0 / (ts.k_star + 4.0)) < 1e-10);
    CHECK(ts.a_star == doctest::Approx(-(ts.k_star - 2.0) * std::sqrt(2.0 * ts.k_star) /
                                       (4.0 * ts.k_star))
                           .epsilon(1e-14));
    // Sign pattern of the defining equation around the root.
    auto g = [](double K) { return 2.0 - std::exp2((K - 2.0) / K) - 4.0 / (K + 4.0); };
    CHECK(g(4.0) > 0.0);
    CHECK(g(10.0) < 0.0);
    // The root of f = h sits exactly on b*_FS when a = a*.
    CHECK(std::fabs(solve_b_star_extended(ts.a_star) - felli_schneider_star(ts.a_star)) <
          1e-6);
}
