#include <doctest.h>

#include <cmath>
#include <numbers>

#include "capflow/caps.hpp"
#include "capflow/curvature.hpp"
#include "capflow/grid.hpp"

using namespace capflow;
constexpr double pi = std::numbers::pi;

TEST_CASE("cap radial profile endpoints and sphere membership")
{
    const double r = 1.4, theta = pi / 3.0;
    CHECK(cap_radial(r, theta, 0.0) ==
          doctest::Approx(r * (1.0 - std::cos(theta))).epsilon(1e-14));
    CHECK(cap_radial(r, theta, pi / 2.0) ==
          doctest::Approx(r * std::sin(theta)).epsilon(1e-14));
    // every point lies on the sphere |x - r cos(theta) e| = r with e = -e_{n+1}
    for (double beta : {0.1, 0.7, 1.2, 1.5}) {
        const double rho = cap_radial(r, theta, beta);
        const double z = rho * std::cos(beta) + r * std::cos(theta);
        const double s = rho * std::sin(beta);
        CHECK(std::sqrt(z * z + s * s) == doctest::Approx(r).epsilon(1e-14));
    }
}

TEST_CASE("ball cap volume: closed forms at n = 2 and hemisphere values")
{
    // |B_theta^3| = pi (1 - cos t)^2 (2 + cos t) / 3
    for (double theta : {pi / 2.0, pi / 3.0, pi / 4.0, pi / 6.0}) {
        const double c = std::cos(theta);
        const double exact = pi * (1.0 - c) * (1.0 - c) * (2.0 + c) / 3.0;
        CHECK(ball_cap_volume(2, theta) == doctest::Approx(exact).epsilon(1e-12));
    }
    CHECK(ball_cap_volume(2, pi / 2.0) == doctest::Approx(2.0 * pi / 3.0).epsilon(1e-12));
    CHECK(ball_cap_volume(2, pi / 3.0) == doctest::Approx(5.0 * pi / 24.0).epsilon(1e-12));
    // theta = pi/2 gives half the unit-ball volume in any dimension
    for (int n = 2; n <= 5; ++n) {
        const double ball = std::pow(pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1) + 1.0);
        CHECK(ball_cap_volume(n, pi / 2.0) == doctest::Approx(0.5 * ball).epsilon(1e-12));
    }
    CHECK_THROWS_AS((void)ball_cap_volume(1, pi / 3.0), std::invalid_argument);
    CHECK_THROWS_AS((void)ball_cap_volume(2, 2.5), std::invalid_argument);
}

TEST_CASE("cap quermass scaling r^{n+1-m} and limit radius inversion")
{
    const double theta = pi / 3.0;
    for (int n : {2, 3}) {
        const double B = ball_cap_volume(n, theta);
        for (double r : {0.5, 1.0, 2.0}) {
            const SphericalCap cap{r, theta};
            for (int m = 0; m <= n + 1; ++m) {
                CHECK(cap_quermass(cap, n, m) ==
                      doctest::Approx(B * std::pow(r, n + 1 - m)).epsilon(1e-13));
            }
            for (int k = 1; k <= n; ++k) {
                CHECK(predicted_limit_radius(cap_quermass(cap, n, k), k, n, theta) ==
                      doctest::Approx(r).epsilon(1e-12));
            }
        }
    }
    CHECK_THROWS_AS((void)predicted_limit_radius(-1.0, 1, 2, theta), std::domain_error);
}

TEST_CASE("cap fit recovers the radius and reports sup error")
{
    const double theta = pi / 4.0, r = 1.25;
    const HalfSphereGrid g = build_grid(2, Backend::Axisym, 200);
    const RadialField f = cap_field(g, {r, theta});
    const CapFit fit = fit_cap(f, theta);
    CHECK(fit.r_fit == doctest::Approx(r).epsilon(1e-12));
    CHECK(fit.sup_error < 1e-12);

    // perturbed field: fitted radius stays near, sup error near the amplitude
    RadialField fp = f;
    for (int i = 0; i < g.n_beta; ++i) {
        fp.phi(i, 0) += 0.01 * std::cos(2.0 * g.beta(i));
    }
    const CapFit fit2 = fit_cap(fp, theta);
    CHECK(std::abs(fit2.r_fit - r) < 0.02);
    CHECK(fit2.sup_error > 1e-3);
    CHECK(fit2.sup_error < 0.05);
}

TEST_CASE("exact cap curvature data is umbilic and matches the FD pipeline")
{
    const double theta = pi / 3.0, r = 0.8;
    for (int n : {2, 3}) {
        const HalfSphereGrid g = build_grid(n, Backend::Axisym, 200);
        const CurvatureData exact = exact_cap_curvature(g, {r, theta});
        CHECK((exact.kappa - 1.0 / r).abs().maxCoeff() == 0.0);
        const CurvatureData fd = curvature(cap_field(g, {r, theta}), theta);
        CHECK((exact.u - fd.u).abs().maxCoeff() < 5e-5);
        CHECK((exact.tilt - fd.tilt).abs().maxCoeff() < 5e-5);
        CHECK((exact.area_weight - fd.area_weight).abs().maxCoeff() < 5e-4);
    }
}

TEST_CASE("exact cap support function is positive and u = r(1 - cos t tilt)")
{
    const double theta = pi / 6.0, r = 2.0;
    const HalfSphereGrid g = build_grid(2, Backend::Axisym, 100);
    const CurvatureData exact = exact_cap_curvature(g, {r, theta});
    CHECK((exact.u > 0.0).all());
    const Eigen::ArrayXd reconstructed = r * (1.0 - std::cos(theta) * exact.tilt);
    CHECK((exact.u - reconstructed).abs().maxCoeff() < 1e-14);
}
