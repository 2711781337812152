#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "capflow/jet.hpp"
#include "capflow/symfun.hpp"

namespace capflow {

/// Per-node Weingarten data of the radial graph. Nodes are flattened
/// column-major (index = i_beta + n_beta * j_alpha) to match node_weights().
struct CurvatureData {
    HalfSphereGrid grid;
    Eigen::ArrayXXd kappa;       // num_nodes x n, ascending
    Eigen::ArrayXXd Hm;          // num_nodes x (n+1), Hm(., j) = H_j
    Eigen::ArrayXd u;            // support function e^phi / v
    Eigen::ArrayXd tilt;         // <nu, e_{n+1}> = (cos b + sin b d_b phi) / v
    Eigen::ArrayXd area_weight;  // e^{n phi} v, dA per unit dsigma
};

/// Orthonormal-frame matrices of the symmetric pencil h w = kappa g w at one
/// node, up to the common factors e^phi/v (h) and e^{2 phi} (g) which cancel
/// only jointly; the full scaling is included here.
struct PencilPair {
    Eigen::MatrixXd h;
    Eigen::MatrixXd g;
};

[[nodiscard]] inline PencilPair pencil_at(const SurfaceJet& jt, int ib, int jc)
{
    const int n = jt.grid.n;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);
    grad(0) = jt.db(ib, jc);
    hess(0, 0) = jt.hbb(ib, jc);
    if (jt.grid.backend == Backend::Sphere2d) {
        grad(1) = jt.da(ib, jc);
        hess(0, 1) = hess(1, 0) = jt.hba(ib, jc);
        hess(1, 1) = jt.haa(ib, jc);
    } else {
        for (int m = 1; m < n; ++m) hess(m, m) = jt.haa(ib, jc);
    }
    const double r = jt.r(ib, jc);
    const double v = jt.v(ib, jc);
    const Eigen::MatrixXd core =
        Eigen::MatrixXd::Identity(n, n) + grad * grad.transpose();
    PencilPair out;
    out.h = (r / v) * (core - hess);
    out.g = (r * r) * core;
    return out;
}

namespace detail {

/// H_j for the two-distinct-value curvature vector (kb, ka x (n-1)).
inline void two_value_H(double kb, double ka, int n, Eigen::ArrayXd& H)
{
    H.resize(n + 1);
    H(0) = 1.0;
    double ka_pow = 1.0;  // ka^{j-1}
    for (int j = 1; j <= n; ++j) {
        const double sj = symfun::binomial(n - 1, j) * ka_pow * ka +
                          symfun::binomial(n - 1, j - 1) * ka_pow * kb;
        H(j) = sj / symfun::binomial(n, j);
        ka_pow *= ka;
    }
}

}  // namespace detail

/// Principal curvatures, normalized mean curvatures, support function, normal
/// tilt and area element of the radial graph, from the jet.
[[nodiscard]] inline CurvatureData curvature(const SurfaceJet& jt)
{
    const auto& g = jt.grid;
    const int n = g.n;
    const int nb = g.n_beta;
    const int nodes = g.num_nodes();

    CurvatureData out;
    out.grid = g;
    out.kappa.resize(nodes, n);
    out.Hm.resize(nodes, n + 1);
    out.u.resize(nodes);
    out.tilt.resize(nodes);
    out.area_weight.resize(nodes);

    Eigen::ArrayXd Hrow;
    for (int jc = 0; jc < g.cols(); ++jc) {
        for (int ib = 0; ib < nb; ++ib) {
            const int node = ib + nb * jc;
            const double r = jt.r(ib, jc);
            const double v = jt.v(ib, jc);
            const double inv_rv = 1.0 / (r * v);

            if (g.backend == Backend::Axisym) {
                const double kb = (1.0 - jt.hbb(ib, jc) / (v * v)) * inv_rv;
                const double ka = (1.0 - jt.haa(ib, jc)) * inv_rv;
                detail::two_value_H(kb, ka, n, Hrow);
                out.Hm.row(node) = Hrow.transpose();
                const double lo = std::min(kb, ka);
                out.kappa.row(node).setConstant(std::max(kb, ka));
                out.kappa(node, 0) = lo;
                if (kb > ka) {
                    // ka has multiplicity n-1; ascending order keeps it first
                    out.kappa.row(node).head(n - 1).setConstant(ka);
                    out.kappa(node, n - 1) = kb;
                }
            } else {
                // symmetric pencil of the 2x2 orthonormal-frame matrices;
                // the common factors cancel in det(h - kappa g) = 0
                const double db = jt.db(ib, jc), da = jt.da(ib, jc);
                const double g11 = 1.0 + db * db, g12 = db * da, g22 = 1.0 + da * da;
                const double h11 = g11 - jt.hbb(ib, jc);
                const double h12 = g12 - jt.hba(ib, jc);
                const double h22 = g22 - jt.haa(ib, jc);
                const double detg = g11 * g22 - g12 * g12;  // = v^2
                const double sigma1 =
                    (g22 * h11 + g11 * h22 - 2.0 * g12 * h12) / detg * inv_rv;
                const double sigma2 =
                    (h11 * h22 - h12 * h12) / detg * inv_rv * inv_rv;
                double disc = sigma1 * sigma1 - 4.0 * sigma2;
                disc = disc > 0.0 ? std::sqrt(disc) : 0.0;
                const double k1 = 0.5 * (sigma1 - disc);
                const double k2 = 0.5 * (sigma1 + disc);
                if (!std::isfinite(k1) || !std::isfinite(k2)) {
                    throw std::runtime_error("curvature: non-finite eigenvalue at node " +
                                             std::to_string(node));
                }
                out.kappa(node, 0) = k1;
                out.kappa(node, 1) = k2;
                out.Hm(node, 0) = 1.0;
                out.Hm(node, 1) = 0.5 * sigma1;
                out.Hm(node, 2) = sigma2;
            }

            out.u(node) = r / v;
            out.tilt(node) = (g.cos_beta(ib) + g.sin_beta(ib) * jt.db(ib, jc)) / v;
            out.area_weight(node) = std::pow(r, n) * v;
        }
    }
    return out;
}

[[nodiscard]] inline CurvatureData curvature(const RadialField& field, double theta)
{
    return curvature(jet(field, theta));
}

/// Quotient speed denominator F = H_k / H_{k-1} per node.
[[nodiscard]] inline Eigen::ArrayXd quotient_F(const CurvatureData& curv, int k)
{
    return curv.Hm.col(k) / curv.Hm.col(k - 1);
}

}  // namespace capflow
