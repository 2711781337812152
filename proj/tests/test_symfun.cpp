#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "capflow/symfun.hpp"

using namespace capflow::symfun;

namespace {

/// Brute-force sigma_j by subset enumeration; independent of the recurrence.
double sigma_brute(const Eigen::VectorXd& kappa, int j)
{
    const int n = static_cast<int>(kappa.size());
    double total = (j == 0) ? 1.0 : 0.0;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != j) continue;
        double prod = 1.0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) prod *= kappa(i);
        }
        total += prod;
    }
    return total;
}

Eigen::VectorXd random_positive(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> unif(-1.0, 1.5);
    Eigen::VectorXd kappa(n);
    for (int i = 0; i < n; ++i) kappa(i) = std::exp(unif(rng));
    return kappa;
}

}  // namespace

TEST_CASE("binomial coefficients")
{
    CHECK(binomial(5, 0) == 1.0);
    CHECK(binomial(5, 2) == 10.0);
    CHECK(binomial(6, 3) == 20.0);
    CHECK(binomial(3, 4) == 0.0);
    CHECK(binomial(3, -1) == 0.0);
}

TEST_CASE("elementary symmetric polynomials match subset enumeration, n <= 6")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);  // signed entries too
    for (int n = 2; n <= 6; ++n) {
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::VectorXd kappa(n);
            for (int i = 0; i < n; ++i) kappa(i) = unif(rng);
            const Eigen::VectorXd e = elementary_all(kappa);
            for (int j = 0; j <= n; ++j) {
                const double ref = sigma_brute(kappa, j);
                CHECK(std::abs(e(j) - ref) <=
                      1e-12 * std::max(1.0, std::abs(ref)));
            }
        }
    }
}

TEST_CASE("elementary_excluding equals brute force on the reduced vector")
{
    std::mt19937_64 rng(12);
    for (int n = 3; n <= 6; ++n) {
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::VectorXd kappa = random_positive(rng, n);
            const Eigen::VectorXd e = elementary_all(kappa);
            for (int drop = 0; drop < n; ++drop) {
                Eigen::VectorXd reduced(n - 1);
                int idx = 0;
                for (int i = 0; i < n; ++i) {
                    if (i != drop) reduced(idx++) = kappa(i);
                }
                const Eigen::VectorXd em = elementary_excluding(e, kappa(drop));
                for (int j = 0; j < n; ++j) {
                    const double ref = sigma_brute(reduced, j);
                    CHECK(std::abs(em(j) - ref) <=
                          1e-11 * std::max(1.0, std::abs(ref)));
                }
            }
        }
    }
}

TEST_CASE("normalized H is 1 on the unit sphere and scales with homogeneity")
{
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    for (int j = 0; j <= 4; ++j) CHECK(normalized_H(ones, j) == doctest::Approx(1.0));
    const Eigen::VectorXd two = 2.0 * ones;
    for (int j = 0; j <= 4; ++j) {
        CHECK(normalized_H(two, j) == doctest::Approx(std::pow(2.0, j)));
    }
}

TEST_CASE("cone predicates and cone_violation payload")
{
    Eigen::VectorXd kappa(3);
    kappa << 1.0, 2.0, -0.5;
    CHECK(!in_positive_cone(kappa));
    CHECK(in_garding_cone(kappa, 1));   // sigma_1 = 2.5 > 0
    CHECK(!in_garding_cone(kappa, 3));  // sigma_3 < 0
    try {
        require_positive(kappa, "test");
        FAIL("expected cone_violation");
    } catch (const cone_violation& e) {
        CHECK(e.kappa()(2) == -0.5);
    }
}

TEST_CASE("quotient value: umbilic closed form and frozen sample")
{
    for (int n = 2; n <= 5; ++n) {
        for (int k = 1; k <= n; ++k) {
            const Eigen::VectorXd kappa = 1.7 * Eigen::VectorXd::Ones(n);
            CHECK(quotient_value(k, kappa) == doctest::Approx(1.7).epsilon(1e-13));
        }
    }
    Eigen::VectorXd kappa(3);
    kappa << 1.0, 2.0, 3.0;
    // H_1 = 2, H_2 = 11/3, H_3 = 6; F_2 = (11/3)/2
    CHECK(quotient_value(2, kappa) == doctest::Approx(11.0 / 6.0).epsilon(1e-14));
    CHECK(quotient_value(3, kappa) == doctest::Approx(6.0 / (11.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("quotient gradient matches central differences of the value")
{
    std::mt19937_64 rng(13);
    for (int n = 2; n <= 5; ++n) {
        for (int k = 1; k <= n; ++k) {
            for (int trial = 0; trial < 10; ++trial) {
                const Eigen::VectorXd kappa = random_positive(rng, n);
                const Eigen::VectorXd grad = quotient_gradient(k, kappa);
                for (int i = 0; i < n; ++i) {
                    const double h = 1e-6 * kappa(i);
                    Eigen::VectorXd kp = kappa, km = kappa;
                    kp(i) += h;
                    km(i) -= h;
                    const double fd =
                        (quotient_value(k, kp) - quotient_value(k, km)) / (2.0 * h);
                    CHECK(grad(i) ==
                          doctest::Approx(fd).epsilon(1e-6).scale(std::abs(fd) + 1.0));
                }
            }
        }
    }
}

TEST_CASE("Euler relation: sum fdot_i kappa_i = F to 1e-10")
{
    std::mt19937_64 rng(14);
    for (int n = 2; n <= 6; ++n) {
        for (int k = 1; k <= n; ++k) {
            for (int trial = 0; trial < 25; ++trial) {
                const Eigen::VectorXd kappa = random_positive(rng, n);
                const double F = quotient_value(k, kappa);
                const double euler = quotient_gradient(k, kappa).dot(kappa);
                CHECK(std::abs(euler - F) <= 1e-10 * std::max(1.0, std::abs(F)));
            }
        }
    }
}

TEST_CASE("key sandwich inequality, frozen middle term, 1e4 positive samples")
{
    // frozen reference: n = 3, k = 2, kappa = (1, 2, 3)
    Eigen::VectorXd kappa(3);
    kappa << 1.0, 2.0, 3.0;
    CHECK(key_inequality_middle_closed(2, kappa) ==
          doctest::Approx(134.0 / 36.0).epsilon(1e-14));
    const SandwichTerms frozen = key_inequality_terms(2, kappa);
    CHECK(frozen.lower == doctest::Approx(121.0 / 36.0).epsilon(1e-13));
    CHECK(frozen.middle == doctest::Approx(134.0 / 36.0).epsilon(1e-12));
    CHECK(frozen.upper == doctest::Approx(242.0 / 36.0).epsilon(1e-13));

    std::mt19937_64 rng(15);
    int checked = 0;
    while (checked < 10000) {
        const int n = 2 + static_cast<int>(rng() % 5);  // n in 2..6
        const int k = 1 + static_cast<int>(rng() % n);
        const Eigen::VectorXd sample = random_positive(rng, n);
        const SandwichTerms st = key_inequality_terms(k, sample);
        const double scale = std::abs(st.upper) + 1.0;
        CHECK(st.lower <= st.middle + 1e-10 * scale);
        CHECK(st.middle <= st.upper + 1e-10 * scale);
        CHECK(std::abs(st.middle - key_inequality_middle_closed(k, sample)) <=
              1e-9 * scale);
        ++checked;
    }
}

TEST_CASE("Newton-MacLaurin gap nonnegative, zero at umbilic, frozen value")
{
    Eigen::VectorXd kappa(3);
    kappa << 1.0, 2.0, 3.0;
    CHECK(newton_maclaurin_gap(kappa, 2, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(newton_maclaurin_gap(Eigen::VectorXd::Constant(4, 2.5), 3, 1) ==
          doctest::Approx(0.0).scale(1.0));

    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 5);
        const Eigen::VectorXd sample = random_positive(rng, n);
        const int k = 2 + static_cast<int>(rng() % (n - 1));
        const int l = 1 + static_cast<int>(rng() % (k - 1));
        CHECK(newton_maclaurin_gap(sample, k, l) >= -1e-12);
    }
}

TEST_CASE("concavity ordering: F at the midpoint dominates the mean of F")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 5);
        const int k = 1 + static_cast<int>(rng() % n);
        const Eigen::VectorXd a = random_positive(rng, n);
        const Eigen::VectorXd b = random_positive(rng, n);
        const double lhs = quotient_value(k, ((a + b) / 2.0).eval());
        const double rhs = 0.5 * (quotient_value(k, a) + quotient_value(k, b));
        CHECK(lhs >= rhs - 1e-12 * (std::abs(lhs) + 1.0));
    }
}

TEST_CASE("inverse-concavity residual nonnegative within difference-step error")
{
    std::mt19937_64 rng(18);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 4);
        const int k = 1 + static_cast<int>(rng() % n);
        const Eigen::VectorXd kappa = random_positive(rng, n);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y(i) = gauss(rng);
        y.normalize();  // the form is quadratic in y; unit scale bounds the FD error
        CHECK(inverse_concavity_residual(k, kappa, y) >= -1e-6);
    }
}
