#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace capflow {

enum class Backend { Axisym, Sphere2d };

/// Surface area of the unit m-sphere, |S^m| = 2 pi^{(m+1)/2} / Gamma((m+1)/2).
[[nodiscard]] inline double unit_sphere_area(int m)
{
    const double pi = std::numbers::pi;
    return 2.0 * std::pow(pi, 0.5 * (m + 1)) / std::tgamma(0.5 * (m + 1));
}

/// Cell-centered grid on the closed half-sphere chart (beta, alpha) with
/// beta in (0, pi/2). No node sits on the pole or on the boundary circle;
/// both are cell faces handled through one ghost layer per end.
struct HalfSphereGrid {
    int n = 2;  // hypersurface dimension
    Backend backend = Backend::Axisym;
    int n_beta = 0;
    int n_alpha = 0;  // 0 for axisym
    double dbeta = 0.0;
    double dalpha = 0.0;
    Eigen::ArrayXd beta;      // cell centers, beta_i = (i + 1/2) dbeta
    Eigen::ArrayXd sin_beta;
    Eigen::ArrayXd cos_beta;
    Eigen::ArrayXd cot_beta;
    double omega_nm1 = 0.0;   // |S^{n-1}|

    [[nodiscard]] int cols() const { return backend == Backend::Sphere2d ? n_alpha : 1; }
    [[nodiscard]] int num_nodes() const { return n_beta * cols(); }

    /// dsigma quadrature weight per node, flattened column-major
    /// (node index = i_beta + n_beta * j_alpha).
    [[nodiscard]] Eigen::ArrayXd node_weights() const
    {
        Eigen::ArrayXd wrow = sin_beta.pow(n - 1) * dbeta;
        if (backend == Backend::Axisym) return wrow * omega_nm1;
        Eigen::ArrayXd w(num_nodes());
        for (int j = 0; j < n_alpha; ++j) w.segment(j * n_beta, n_beta) = wrow * dalpha;
        return w;
    }
};

[[nodiscard]] inline HalfSphereGrid build_grid(int n, Backend backend, int n_beta,
                                               int n_alpha = 0)
{
    if (n < 2) throw std::invalid_argument("build_grid: dimension n must be >= 2");
    if (n_beta < 16) throw std::invalid_argument("build_grid: n_beta must be >= 16");
    if (backend == Backend::Sphere2d) {
        if (n != 2) throw std::invalid_argument("build_grid: sphere2d requires n = 2");
        if (n_alpha < 8 || n_alpha % 2 != 0) {
            throw std::invalid_argument("build_grid: sphere2d requires even n_alpha >= 8");
        }
    } else {
        n_alpha = 0;
    }

    HalfSphereGrid g;
    g.n = n;
    g.backend = backend;
    g.n_beta = n_beta;
    g.n_alpha = n_alpha;
    g.dbeta = (std::numbers::pi / 2.0) / n_beta;
    g.dalpha = (backend == Backend::Sphere2d) ? (2.0 * std::numbers::pi / n_alpha) : 0.0;
    g.beta = (Eigen::ArrayXd::LinSpaced(n_beta, 0, n_beta - 1) + 0.5) * g.dbeta;
    g.sin_beta = g.beta.sin();
    g.cos_beta = g.beta.cos();
    g.cot_beta = g.cos_beta / g.sin_beta;
    g.omega_nm1 = unit_sphere_area(n - 1);
    return g;
}

/// Deterministic pairwise reduction; fixed association independent of any
/// data-parallel execution of the integrand.
[[nodiscard]] inline double pairwise_sum(const Eigen::ArrayXd& x, Eigen::Index lo = 0,
                                         Eigen::Index len = -1)
{
    if (len < 0) len = x.size();
    if (len <= 8) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < len; ++i) s += x(lo + i);
        return s;
    }
    const Eigen::Index half = len / 2;
    return pairwise_sum(x, lo, half) + pairwise_sum(x, lo + half, len - half);
}

/// Integral over the half-sphere of a nodal function against dsigma.
[[nodiscard]] inline double integrate(const HalfSphereGrid& grid, const Eigen::ArrayXd& nodal)
{
    if (nodal.size() != grid.num_nodes()) {
        throw std::invalid_argument("integrate: nodal size mismatch");
    }
    return pairwise_sum((nodal * grid.node_weights()).eval());
}

}  // namespace capflow
