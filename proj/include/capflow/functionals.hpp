#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "capflow/caps.hpp"
#include "capflow/curvature.hpp"
#include "capflow/field.hpp"
#include "capflow/grid.hpp"

namespace capflow {

/// Snapshot of every integral functional tracked at one time.
struct QuermassReport {
    double t = 0.0;
    Eigen::VectorXd V;                    // V_0 .. V_{n+1}
    double area = 0.0;                    // |Sigma|
    double wetted = 0.0;                  // |hat(dSigma)|
    Eigen::VectorXd boundary_terms;       // int_{dSigma} H^{dSigma}_{k-1} ds, k = 1..n
    Eigen::VectorXd minkowski_residual;   // per k = 1..n, relative
    std::vector<std::pair<std::pair<int, int>, double>> af_gaps;
};

/// Enclosed volume V_0 = 1/(n+1) int_Sigma u dA (the wetted face contributes
/// nothing since <x, -e_{n+1}> = 0 on the hyperplane).
[[nodiscard]] inline double enclosed_volume(const CurvatureData& curv)
{
    if ((curv.u <= 0.0).any()) {
        throw std::domain_error("enclosed_volume: u <= 0, field is not star-shaped");
    }
    return integrate(curv.grid, (curv.u * curv.area_weight).eval()) / (curv.grid.n + 1);
}

[[nodiscard]] inline double surface_area(const CurvatureData& curv)
{
    return integrate(curv.grid, curv.area_weight);
}

/// Area wetted on the support hyperplane. Axisym: round n-ball of radius R.
/// Sphere2d (n = 2): polar planimeter integral (1/2) oint R(alpha)^2 dalpha.
[[nodiscard]] inline double wetted_area(const RadialField& field, double theta)
{
    (void)theta;
    const auto& g = field.grid;
    const Eigen::ArrayXd R = boundary_radius(field);
    if ((R <= 0.0).any()) {
        throw std::domain_error("wetted_area: nonpositive boundary radius");
    }
    if (g.backend == Backend::Axisym) {
        return g.omega_nm1 / g.n * std::pow(R(0), g.n);
    }
    return 0.5 * pairwise_sum(R.square().eval()) * g.dalpha;
}

namespace detail {

/// Periodic centered first/second alpha-derivatives of a boundary trace.
inline void boundary_trace_derivatives(const Eigen::ArrayXd& R, double dalpha,
                                       Eigen::ArrayXd& Ra, Eigen::ArrayXd& Raa)
{
    const int na = static_cast<int>(R.size());
    Ra.resize(na);
    Raa.resize(na);
    for (int j = 0; j < na; ++j) {
        const int jm = (j + na - 1) % na;
        const int jp = (j + 1) % na;
        Ra(j) = (R(jp) - R(jm)) / (2.0 * dalpha);
        Raa(j) = (R(jp) - 2.0 * R(j) + R(jm)) / (dalpha * dalpha);
    }
}

}  // namespace detail

/// Boundary integral int_{dSigma} H^{dSigma}_{k-1} ds for k = 1..n, with the
/// normalized curvatures of dSigma as a hypersurface of R^n (binomial
/// C(n-1, k-1)). Axisym boundary is a round (n-1)-sphere of radius R, so the
/// integral collapses to omega_{n-1} R^{n-k}. Sphere2d uses the polar-curve
/// curvature and arc length.
[[nodiscard]] inline double boundary_curvature_integral(const RadialField& field, int k)
{
    const auto& g = field.grid;
    if (k < 1 || k > g.n) throw std::out_of_range("boundary_curvature_integral: bad k");
    const Eigen::ArrayXd R = boundary_radius(field);
    if (g.backend == Backend::Axisym) {
        return g.omega_nm1 * std::pow(R(0), g.n - k);
    }
    Eigen::ArrayXd Ra, Raa;
    detail::boundary_trace_derivatives(R, g.dalpha, Ra, Raa);
    const Eigen::ArrayXd ds = (R.square() + Ra.square()).sqrt();
    if (k == 1) return pairwise_sum(ds.eval()) * g.dalpha;
    const Eigen::ArrayXd khat =
        (R.square() + 2.0 * Ra.square() - R * Raa) / ds.cube();
    return pairwise_sum((khat * ds).eval()) * g.dalpha;
}

/// Capillary quermassintegral V_{m,theta}, m = 0..n+1. For m >= 2 the
/// boundary coefficient is cos(theta) sin^{m-1}(theta) / (n (n+1)), the
/// normalization pinned by the exact cap values |B_theta| r^{n+1-m}.
[[nodiscard]] inline double quermass(const CurvatureData& curv, const RadialField& field,
                                     double theta, int m)
{
    const int n = curv.grid.n;
    if (m < 0 || m > n + 1) throw std::out_of_range("quermass: bad index");
    if (m == 0) return enclosed_volume(curv);
    if (m == 1) {
        return (surface_area(curv) - std::cos(theta) * wetted_area(field, theta)) /
               (n + 1);
    }
    const int k = m - 1;  // interior integrand H_k
    const double interior =
        integrate(curv.grid, (curv.Hm.col(k) * curv.area_weight).eval()) / (n + 1);
    const double coeff =
        std::cos(theta) * std::pow(std::sin(theta), k) / (n * (n + 1.0));
    return interior - coeff * boundary_curvature_integral(field, k);
}

/// Relative residual of the Minkowski identity
/// int H_{k-1} (1 + cos(theta) <nu, e>) dA = int H_k u dA, with <nu, e> = -tilt.
[[nodiscard]] inline double minkowski_residual(const CurvatureData& curv, double theta,
                                               int k)
{
    const int n = curv.grid.n;
    if (k < 1 || k > n) throw std::out_of_range("minkowski_residual: bad k");
    const double ct = std::cos(theta);
    const double lhs = integrate(
        curv.grid, (curv.Hm.col(k - 1) * (1.0 - ct * curv.tilt) * curv.area_weight).eval());
    const double rhs =
        integrate(curv.grid, (curv.Hm.col(k) * curv.u * curv.area_weight).eval());
    if (rhs == 0.0) throw std::domain_error("minkowski_residual: vanishing denominator");
    return (lhs - rhs) / rhs;
}

/// Alexandrov-Fenchel gap V_k/|B_theta| - (V_l/|B_theta|)^{(n+1-k)/(n+1-l)};
/// nonnegative for convex capillary hypersurfaces, zero exactly on caps.
[[nodiscard]] inline double af_gap(double V_k, double V_l, int k, int l, int n,
                                   double theta)
{
    if (!(0 <= l && l < k && k <= n)) throw std::out_of_range("af_gap: need 0 <= l < k <= n");
    const double B = ball_cap_volume(n, theta);
    const double expo = static_cast<double>(n + 1 - k) / static_cast<double>(n + 1 - l);
    return V_k / B - std::pow(V_l / B, expo);
}

/// Gap of the Minkowski-type inequality
/// int H dA >= n (n+1)^{1/n} |B_theta|^{1/n} (|Sigma| - cos t |wetted|)^{(n-1)/n}
///             + cos(theta) sin(theta) |dSigma|,  with H = n H_1.
[[nodiscard]] inline double minkowski_inequality_gap(const CurvatureData& curv,
                                                     const RadialField& field,
                                                     double theta)
{
    const int n = curv.grid.n;
    const double H_total =
        n * integrate(curv.grid, (curv.Hm.col(1) * curv.area_weight).eval());
    const double relative_area =
        surface_area(curv) - std::cos(theta) * wetted_area(field, theta);
    const double B = ball_cap_volume(n, theta);
    const Eigen::ArrayXd R = boundary_radius(field);
    double boundary_length;
    if (field.grid.backend == Backend::Axisym) {
        boundary_length = field.grid.omega_nm1 * std::pow(R(0), n - 1);
    } else {
        Eigen::ArrayXd Ra, Raa;
        detail::boundary_trace_derivatives(R, field.grid.dalpha, Ra, Raa);
        boundary_length =
            pairwise_sum((R.square() + Ra.square()).sqrt().eval()) * field.grid.dalpha;
    }
    return H_total -
           n * std::pow(n + 1.0, 1.0 / n) * std::pow(B, 1.0 / n) *
               std::pow(relative_area, (n - 1.0) / n) -
           std::cos(theta) * std::sin(theta) * boundary_length;
}

/// Full functional snapshot at one time.
[[nodiscard]] inline QuermassReport
full_report(const CurvatureData& curv, const RadialField& field, double theta, double t,
            const std::vector<std::pair<int, int>>& af_pairs = {})
{
    const int n = curv.grid.n;
    QuermassReport rep;
    rep.t = t;
    rep.V.resize(n + 2);
    for (int m = 0; m <= n + 1; ++m) rep.V(m) = quermass(curv, field, theta, m);
    rep.area = surface_area(curv);
    rep.wetted = wetted_area(field, theta);
    rep.boundary_terms.resize(n);
    rep.minkowski_residual.resize(n);
    for (int k = 1; k <= n; ++k) {
        rep.boundary_terms(k - 1) = boundary_curvature_integral(field, k);
        rep.minkowski_residual(k - 1) = minkowski_residual(curv, theta, k);
    }
    for (const auto& [k, l] : af_pairs) {
        rep.af_gaps.push_back({{k, l}, af_gap(rep.V(k), rep.V(l), k, l, n, theta)});
    }
    return rep;
}

}  // namespace capflow
