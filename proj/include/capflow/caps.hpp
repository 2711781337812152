#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "capflow/curvature.hpp"
#include "capflow/field.hpp"
#include "capflow/grid.hpp"

namespace capflow {

/// Spherical cap C_{r,theta}: part of the round sphere of radius r centered at
/// r cos(theta) e with e = -e_{n+1}, meeting the hyperplane at angle theta.
struct SphericalCap {
    double r = 1.0;
    double theta = std::numbers::pi / 2.0;
};

/// Radial function of the cap along the ray at polar angle beta: the positive
/// solution of |rho z - r cos(theta) e| = r.
[[nodiscard]] inline double cap_radial(double r, double theta, double beta)
{
    const double ct = std::cos(theta);
    const double sb = std::sin(beta);
    return r * (std::sqrt(1.0 - ct * ct * sb * sb) - ct * std::cos(beta));
}

namespace detail {

template <class F>
double adaptive_simpson(F f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

template <class F>
double integrate_1d(F f, double a, double b, double tol = 1e-13)
{
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace detail

/// |B_theta^{n+1}|: volume of the unit-ball slice above height cos(theta),
/// by 1-D quadrature of n-ball cross sections.
[[nodiscard]] inline double ball_cap_volume(int n, double theta)
{
    if (n < 2) throw std::invalid_argument("ball_cap_volume: n must be >= 2");
    check_theta(theta);
    const double cn = std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
    const double ct = std::cos(theta);
    return detail::integrate_1d(
        [&](double t) { return cn * std::pow(1.0 - t * t, 0.5 * n); }, ct, 1.0);
}

/// Closed-form capillary quermassintegral of the cap: |B_theta^{n+1}| r^{n+1-m}
/// for 0 <= m <= n. For m = n+1 the same formula is r-independent; only its
/// constancy in r is meaningful (normalization left open).
[[nodiscard]] inline double cap_quermass(const SphericalCap& cap, int n, int m)
{
    if (m < 0 || m > n + 1) throw std::out_of_range("cap_quermass: bad index");
    return ball_cap_volume(n, cap.theta) * std::pow(cap.r, n + 1 - m);
}

/// Limit radius predicted by conservation of V_k: r = (V_k / |B_theta|)^{1/(n+1-k)}.
[[nodiscard]] inline double predicted_limit_radius(double V_k, int k, int n, double theta)
{
    if (!(V_k > 0.0)) throw std::domain_error("predicted_limit_radius: V_k must be > 0");
    if (k < 1 || k > n) throw std::out_of_range("predicted_limit_radius: bad index");
    return std::pow(V_k / ball_cap_volume(n, theta), 1.0 / (n + 1 - k));
}

/// phi = log rho of the cap sampled on the grid.
[[nodiscard]] inline RadialField cap_field(const HalfSphereGrid& grid, const SphericalCap& cap)
{
    RadialField f = RadialField::zero(grid);
    for (int i = 0; i < grid.n_beta; ++i) {
        f.phi.row(i).setConstant(std::log(cap_radial(cap.r, cap.theta, grid.beta(i))));
    }
    return f;
}

struct CapFit {
    double r_fit = 0.0;
    double sup_error = 0.0;
};

/// Weighted least-squares fit of the cap family to a radial field. The cap
/// radial function is linear in r, so the minimizer is closed form.
[[nodiscard]] inline CapFit fit_cap(const RadialField& field, double theta)
{
    const auto& g = field.grid;
    const Eigen::ArrayXd w = g.node_weights();
    Eigen::ArrayXd rho(g.num_nodes()), shape(g.num_nodes());
    for (int jc = 0; jc < g.cols(); ++jc) {
        for (int ib = 0; ib < g.n_beta; ++ib) {
            rho(ib + g.n_beta * jc) = std::exp(field.phi(ib, jc));
            shape(ib + g.n_beta * jc) = cap_radial(1.0, theta, g.beta(ib));
        }
    }
    if ((rho <= 0.0).all()) throw std::domain_error("fit_cap: degenerate field");
    CapFit fit;
    fit.r_fit = pairwise_sum((w * rho * shape).eval()) /
                pairwise_sum((w * shape * shape).eval());
    fit.sup_error = (rho - fit.r_fit * shape).abs().maxCoeff();
    return fit;
}

/// Exact nodal curvature data of the cap (no finite differences): umbilic
/// kappa = 1/r and closed-form support, tilt and area element.
[[nodiscard]] inline CurvatureData exact_cap_curvature(const HalfSphereGrid& grid,
                                                       const SphericalCap& cap)
{
    const int n = grid.n;
    const double r = cap.r;
    const double ct = std::cos(cap.theta);
    CurvatureData out;
    out.grid = grid;
    out.kappa = Eigen::ArrayXXd::Constant(grid.num_nodes(), n, 1.0 / r);
    out.Hm.resize(grid.num_nodes(), n + 1);
    for (int j = 0; j <= n; ++j) out.Hm.col(j).setConstant(std::pow(r, -j));
    out.u.resize(grid.num_nodes());
    out.tilt.resize(grid.num_nodes());
    out.area_weight.resize(grid.num_nodes());
    for (int jc = 0; jc < grid.cols(); ++jc) {
        for (int ib = 0; ib < grid.n_beta; ++ib) {
            const int node = ib + grid.n_beta * jc;
            const double beta = grid.beta(ib);
            const double rho = cap_radial(r, cap.theta, beta);
            const double tilt = (rho * std::cos(beta) + r * ct) / r;
            out.tilt(node) = tilt;
            out.u(node) = r * (1.0 - ct * tilt);  // u = r (1 + cos(theta) <nu, e>)
            // v from |x|^2 relations: u = rho / v
            const double v = rho / out.u(node);
            out.area_weight(node) = std::pow(rho, n) * v;
        }
    }
    return out;
}

}  // namespace capflow
