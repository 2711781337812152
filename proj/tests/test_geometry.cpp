#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "capflow/caps.hpp"
#include "capflow/curvature.hpp"
#include "capflow/field.hpp"
#include "capflow/grid.hpp"
#include "capflow/jet.hpp"

using namespace capflow;
constexpr double pi = std::numbers::pi;

namespace {

/// Analytic radial derivative of the cap profile, phi' = rho'/rho.
double cap_phi_prime(double theta, double beta)
{
    const double c = std::cos(theta);
    const double sb = std::sin(beta), cb = std::cos(beta);
    const double root = std::sqrt(1.0 - c * c * sb * sb);
    const double rho = root - c * cb;
    const double drho = -c * c * sb * cb / root + c * sb;
    return drho / rho;
}

}  // namespace

TEST_CASE("grid construction and validation")
{
    const HalfSphereGrid g = build_grid(3, Backend::Axisym, 64);
    CHECK(g.beta(0) == doctest::Approx(0.5 * g.dbeta));
    CHECK(g.beta(63) == doctest::Approx(pi / 2.0 - 0.5 * g.dbeta));
    CHECK(g.cols() == 1);
    CHECK(g.omega_nm1 == doctest::Approx(4.0 * pi));  // |S^2|

    CHECK_THROWS_AS((void)build_grid(1, Backend::Axisym, 64), std::invalid_argument);
    CHECK_THROWS_AS((void)build_grid(2, Backend::Axisym, 8), std::invalid_argument);
    CHECK_THROWS_AS((void)build_grid(3, Backend::Sphere2d, 64, 32), std::invalid_argument);
    CHECK_THROWS_AS((void)build_grid(2, Backend::Sphere2d, 64, 33), std::invalid_argument);
}

TEST_CASE("quadrature: half-sphere measures and smooth integrands")
{
    for (int n = 2; n <= 4; ++n) {
        const HalfSphereGrid g = build_grid(n, Backend::Axisym, 400);
        const double half_area = unit_sphere_area(n) / 2.0;
        CHECK(integrate(g, Eigen::ArrayXd::Ones(g.num_nodes()).eval()) ==
              doctest::Approx(half_area).epsilon(1e-6));
    }
    // n = 2: int cos(beta) dsigma over the half sphere = pi, both backends
    {
        const HalfSphereGrid ga = build_grid(2, Backend::Axisym, 400);
        Eigen::ArrayXd f(ga.num_nodes());
        for (int i = 0; i < ga.n_beta; ++i) f(i) = ga.cos_beta(i);
        CHECK(integrate(ga, f) == doctest::Approx(pi).epsilon(1e-5));

        const HalfSphereGrid gs = build_grid(2, Backend::Sphere2d, 128, 64);
        Eigen::ArrayXd fs(gs.num_nodes());
        for (int jc = 0; jc < gs.cols(); ++jc) {
            for (int i = 0; i < gs.n_beta; ++i) fs(i + gs.n_beta * jc) = gs.cos_beta(i);
        }
        CHECK(integrate(gs, fs) == doctest::Approx(pi).epsilon(1e-4));
    }
}

TEST_CASE("pairwise_sum matches a long double accumulation")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::ArrayXd x(12345);
    long double acc = 0.0L;
    for (int i = 0; i < x.size(); ++i) {
        x(i) = unif(rng);
        acc += x(i);
    }
    CHECK(pairwise_sum(x) ==
          doctest::Approx(static_cast<double>(acc)).epsilon(1e-13));
}

TEST_CASE("face extrapolation weights reproduce quartics exactly")
{
    const Eigen::ArrayXd w = face_extrapolation_weights();
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-14));
    for (int deg = 1; deg <= 4; ++deg) {
        double val = 0.0;
        for (int j = 0; j < w.size(); ++j) val += w(j) * std::pow(j + 0.5, deg);
        CHECK(val == doctest::Approx(0.0).scale(std::pow(4.5, deg)).epsilon(1e-12));
    }
}

TEST_CASE("oblique boundary fill: cap fields satisfy d_beta phi = cos(theta) v")
{
    for (double theta : {pi / 2.0, pi / 3.0, pi / 4.0}) {
        const HalfSphereGrid g = build_grid(2, Backend::Axisym, 400);
        const RadialField f = cap_field(g, {1.3, theta});
        const SurfaceJet jt = jet(f, theta);
        // extrapolate db to the boundary face and compare with the analytic slope
        const Eigen::ArrayXd w = face_extrapolation_weights();
        double db_face = 0.0;
        for (int j = 0; j < w.size(); ++j) db_face += w(j) * jt.db(g.n_beta - 1 - j, 0);
        const double exact = cap_phi_prime(theta, pi / 2.0);
        CHECK(db_face == doctest::Approx(exact).epsilon(5e-5));
        CHECK(exact ==
              doctest::Approx(oblique_slope(theta, 0.0)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(check_theta(2.0), std::invalid_argument);
    CHECK_THROWS_AS(check_theta(0.0), std::invalid_argument);
}

TEST_CASE("axisym jet converges at second order on a cap profile")
{
    const double theta = pi / 3.0;
    auto max_db_error = [&](int n_beta) {
        const HalfSphereGrid g = build_grid(2, Backend::Axisym, n_beta);
        const RadialField f = cap_field(g, {1.0, theta});
        const SurfaceJet jt = jet(f, theta);
        double err = 0.0;
        for (int i = 0; i < g.n_beta; ++i) {
            err = std::max(err, std::abs(jt.db(i, 0) - cap_phi_prime(theta, g.beta(i))));
        }
        return err;
    };
    const double e1 = max_db_error(100);
    const double e2 = max_db_error(200);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("sphere2d jet matches analytic derivatives of a pole-regular mode")
{
    // phi = c + a sin^2(beta) cos(2 alpha): smooth at the pole and compatible
    // with the theta = pi/2 fills (phi' = 0 at the boundary face)
    const double a = 0.05, c = 0.2;
    auto worst_error = [&](int n_beta, int n_alpha) {
        const HalfSphereGrid g = build_grid(2, Backend::Sphere2d, n_beta, n_alpha);
        RadialField f = RadialField::zero(g);
        for (int jc = 0; jc < g.cols(); ++jc) {
            for (int i = 0; i < g.n_beta; ++i) {
                const double sb = g.sin_beta(i);
                f.phi(i, jc) = c + a * sb * sb * std::cos(2.0 * jc * g.dalpha);
            }
        }
        const SurfaceJet jt = jet(f, pi / 2.0);
        double worst = 0.0;
        for (int jc = 0; jc < g.cols(); ++jc) {
            const double c2 = std::cos(2.0 * jc * g.dalpha);
            const double s2 = std::sin(2.0 * jc * g.dalpha);
            for (int i = 0; i < g.n_beta; ++i) {
                const double sb = g.sin_beta(i), cb = g.cos_beta(i);
                worst = std::max(worst, std::abs(jt.db(i, jc) - 2.0 * a * sb * cb * c2));
                worst = std::max(worst, std::abs(jt.da(i, jc) + 2.0 * a * sb * s2));
                worst = std::max(
                    worst, std::abs(jt.hbb(i, jc) - 2.0 * a * std::cos(2.0 * g.beta(i)) * c2));
                worst = std::max(worst, std::abs(jt.hba(i, jc) + 2.0 * a * cb * s2));
                worst = std::max(worst,
                                 std::abs(jt.haa(i, jc) - a * (2.0 * cb * cb - 4.0) * c2));
            }
        }
        return worst;
    };
    const double e1 = worst_error(128, 64);
    const double e2 = worst_error(256, 128);
    CHECK(e1 < 1e-3);
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("principal curvatures agree with the generalized eigensolver")
{
    // mildly non-axisymmetric strictly convex field
    const double theta = pi / 2.0;
    const HalfSphereGrid g = build_grid(2, Backend::Sphere2d, 96, 48);
    RadialField f = RadialField::zero(g);
    for (int jc = 0; jc < g.cols(); ++jc) {
        for (int i = 0; i < g.n_beta; ++i) {
            const double alpha = jc * g.dalpha;
            f.phi(i, jc) = 0.03 * std::cos(2.0 * g.beta(i)) +
                           0.02 * g.sin_beta(i) * g.sin_beta(i) *
                               std::cos(2.0 * alpha + 0.4);
        }
    }
    const SurfaceJet jt = jet(f, theta);
    const CurvatureData curv = curvature(jt);
    for (int jc = 0; jc < g.cols(); jc += 7) {
        for (int i = 0; i < g.n_beta; i += 11) {
            const PencilPair pp = pencil_at(jt, i, jc);
            Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(pp.h, pp.g);
            const int node = i + g.n_beta * jc;
            const double scale = pp.h.norm();
            for (int m = 0; m < 2; ++m) {
                CHECK(std::abs(curv.kappa(node, m) - es.eigenvalues()(m)) <=
                      1e-10 * std::max(1.0, scale));
                // pencil residual for the eigenpair
                const Eigen::VectorXd wvec = es.eigenvectors().col(m);
                const double res =
                    ((pp.h - es.eigenvalues()(m) * pp.g) * wvec).norm();
                CHECK(res <= 1e-10 * std::max(1.0, scale));
            }
        }
    }
}

TEST_CASE("axisym and sphere2d backends agree on axisymmetric data")
{
    const double theta = pi / 3.0;
    const int n_beta = 96;
    const HalfSphereGrid ga = build_grid(2, Backend::Axisym, n_beta);
    const HalfSphereGrid gs = build_grid(2, Backend::Sphere2d, n_beta, 32);
    RadialField fa = RadialField::zero(ga);
    RadialField fs = RadialField::zero(gs);
    for (int i = 0; i < n_beta; ++i) {
        const double val = std::log(cap_radial(1.0, theta, ga.beta(i))) +
                           0.04 * std::cos(2.0 * ga.beta(i));
        fa.phi(i, 0) = val;
        fs.phi.row(i).setConstant(val);
    }
    const CurvatureData ca = curvature(fa, theta);
    const CurvatureData cs = curvature(fs, theta);
    double worst = 0.0;
    for (int jc = 0; jc < gs.cols(); ++jc) {
        for (int i = 0; i < n_beta; ++i) {
            const int node = i + n_beta * jc;
            worst = std::max(worst, std::abs(cs.kappa(node, 0) - ca.kappa(i, 0)));
            worst = std::max(worst, std::abs(cs.kappa(node, 1) - ca.kappa(i, 1)));
            worst = std::max(worst, std::abs(cs.u(node) - ca.u(i)));
            worst = std::max(worst, std::abs(cs.tilt(node) - ca.tilt(i)));
        }
    }
    // limited by the discriminant cancellation in the 2x2 eigenvalue formula
    CHECK(worst < 1e-9);

    const RadialField back = restrict_axisym(fs);
    CHECK((back.phi - fa.phi).abs().maxCoeff() < 1e-14);
}

TEST_CASE("restrict_axisym rejects genuinely 2-D fields")
{
    const HalfSphereGrid gs = build_grid(2, Backend::Sphere2d, 32, 16);
    RadialField f = RadialField::zero(gs);
    f.phi(5, 3) = 0.1;
    CHECK_THROWS_AS((void)restrict_axisym(f), std::invalid_argument);
}

TEST_CASE("umbilic check: caps give kappa = 1/r at every node, both backends")
{
    const double theta = pi / 3.0, r = 1.7;
    for (int n : {2, 3, 5}) {
        const HalfSphereGrid g = build_grid(n, Backend::Axisym, 400);
        const CurvatureData curv = curvature(cap_field(g, {r, theta}), theta);
        CHECK((curv.kappa - 1.0 / r).abs().maxCoeff() < 2e-4);
    }
    const HalfSphereGrid gs = build_grid(2, Backend::Sphere2d, 200, 32);
    const CurvatureData curv = curvature(cap_field(gs, {r, theta}), theta);
    CHECK((curv.kappa - 1.0 / r).abs().maxCoeff() < 5e-4);
}
