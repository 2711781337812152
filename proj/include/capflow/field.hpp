#pragma once

#include <Eigen/Dense>

#include "capflow/grid.hpp"

namespace capflow {

/// Discrete radial function phi = log r on a half-sphere grid. Only interior
/// node values are state; ghost layers are recomputed from the boundary
/// conditions whenever derivatives are needed.
struct RadialField {
    HalfSphereGrid grid;
    Eigen::ArrayXXd phi;  // n_beta x cols

    [[nodiscard]] static RadialField zero(const HalfSphereGrid& g)
    {
        return {g, Eigen::ArrayXXd::Zero(g.n_beta, g.cols())};
    }
};

/// Positive root of the oblique condition d_beta phi = cos(theta) * v for a
/// given tangential slope s at the boundary face: cos(theta) sqrt(1+s^2) / sin(theta).
[[nodiscard]] inline double oblique_slope(double theta, double s)
{
    return std::cos(theta) * std::sqrt(1.0 + s * s) / std::sin(theta);
}

inline void check_theta(double theta)
{
    if (!(theta > 0.0 && theta <= std::numbers::pi / 2.0 + 1e-15)) {
        throw std::invalid_argument("contact angle must lie in (0, pi/2]");
    }
}

/// Fill the ghost row below beta = 0. Axisym: even extension. Sphere2d:
/// phi(-beta, alpha) = phi(beta, alpha + pi) via periodic column shift.
inline void apply_pole_bc(Eigen::ArrayXXd& padded, const HalfSphereGrid& grid)
{
    if (grid.backend == Backend::Axisym) {
        padded(0, 0) = padded(1, 0);
        return;
    }
    const int na = grid.n_alpha;
    for (int j = 0; j < na; ++j) {
        padded(0, j) = padded(1, (j + na / 2) % na);
    }
}

/// Fill the ghost row above beta = pi/2 so a fourth-order one-sided difference
/// at the face equals the oblique slope. The stencil uses the ghost at +h/2
/// and the last four interior rows at -h/2, -3h/2, -5h/2, -7h/2 from the face
/// (derivative weights 11/12, -17/24, -3/8, 5/24, -1/24 over h); the midpoint
/// two-point fill would leave an O(h) error in the boundary-row Hessian.
/// The tangential slope s is the azimuthal derivative quadratically
/// extrapolated to the face from the last three interior rows.
inline void apply_capillary_bc(Eigen::ArrayXXd& padded, const HalfSphereGrid& grid,
                               double theta)
{
    check_theta(theta);
    const int nb = grid.n_beta;
    const double h = grid.dbeta;
    auto ghost = [&](double s_face, int j) {
        return (h * s_face + (17.0 / 24.0) * padded(nb, j) +
                (3.0 / 8.0) * padded(nb - 1, j) - (5.0 / 24.0) * padded(nb - 2, j) +
                (1.0 / 24.0) * padded(nb - 3, j)) *
               (12.0 / 11.0);
    };
    if (grid.backend == Backend::Axisym) {
        padded(nb + 1, 0) = ghost(oblique_slope(theta, 0.0), 0);
        return;
    }
    const int na = grid.n_alpha;
    const double inv2da = 1.0 / (2.0 * grid.dalpha);
    for (int j = 0; j < na; ++j) {
        const int jm = (j + na - 1) % na;
        const int jp = (j + 1) % na;
        // sin(beta) = 1 at the face, so the orthonormal tangential slope is d_alpha phi
        const double s1 = (padded(nb, jp) - padded(nb, jm)) * inv2da;
        const double s2 = (padded(nb - 1, jp) - padded(nb - 1, jm)) * inv2da;
        const double s3 = (padded(nb - 2, jp) - padded(nb - 2, jm)) * inv2da;
        const double s_face = 1.875 * s1 - 1.25 * s2 + 0.375 * s3;
        padded(nb + 1, j) = ghost(oblique_slope(theta, s_face), j);
    }
}

/// Interior values padded with one ghost row at each beta end, both fills applied.
[[nodiscard]] inline Eigen::ArrayXXd with_ghosts(const RadialField& field, double theta)
{
    const auto& g = field.grid;
    Eigen::ArrayXXd padded(g.n_beta + 2, g.cols());
    padded.middleRows(1, g.n_beta) = field.phi;
    apply_pole_bc(padded, g);
    apply_capillary_bc(padded, g, theta);
    return padded;
}

/// One-sided polynomial extrapolation weights: value at the cell face from the
/// m nearest cell centers, spaced at (j + 1/2) dbeta from the face.
[[nodiscard]] inline Eigen::ArrayXd face_extrapolation_weights(int m = 5)
{
    Eigen::ArrayXd x(m), w(m);
    for (int j = 0; j < m; ++j) x(j) = j + 0.5;
    for (int j = 0; j < m; ++j) {
        double lj = 1.0;
        for (int i = 0; i < m; ++i) {
            if (i != j) lj *= (0.0 - x(i)) / (x(j) - x(i));
        }
        w(j) = lj;
    }
    return w;
}

/// phi extrapolated to the boundary face beta = pi/2, one value per column.
[[nodiscard]] inline Eigen::ArrayXd phi_at_boundary_face(const RadialField& field)
{
    const int nb = field.grid.n_beta;
    const Eigen::ArrayXd w = face_extrapolation_weights();
    const int m = static_cast<int>(w.size());
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(field.grid.cols());
    for (int j = 0; j < m; ++j) out += w(j) * field.phi.row(nb - 1 - j).transpose();
    return out;
}

/// phi extrapolated to the pole beta = 0, one value per column.
[[nodiscard]] inline Eigen::ArrayXd phi_at_pole(const RadialField& field)
{
    const Eigen::ArrayXd w = face_extrapolation_weights();
    const int m = static_cast<int>(w.size());
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(field.grid.cols());
    for (int j = 0; j < m; ++j) out += w(j) * field.phi.row(j).transpose();
    return out;
}

/// Boundary circle radius R = e^phi at beta = pi/2, per column.
[[nodiscard]] inline Eigen::ArrayXd boundary_radius(const RadialField& field)
{
    return phi_at_boundary_face(field).exp();
}

/// Collapse an (almost) axisymmetric sphere2d field to the 1-D backend by
/// azimuthal averaging. Rejects fields whose azimuthal variation exceeds tol.
[[nodiscard]] inline RadialField restrict_axisym(const RadialField& field,
                                                 double tol = 1e-12)
{
    if (field.grid.backend != Backend::Sphere2d) {
        throw std::invalid_argument("restrict_axisym: field is not sphere2d");
    }
    const double variation =
        (field.phi.rowwise().maxCoeff() - field.phi.rowwise().minCoeff()).maxCoeff();
    if (variation > tol) {
        throw std::invalid_argument("restrict_axisym: azimuthal variation " +
                                    std::to_string(variation) + " exceeds tolerance");
    }
    RadialField out;
    out.grid = build_grid(field.grid.n, Backend::Axisym, field.grid.n_beta);
    out.phi = field.phi.rowwise().mean();
    return out;
}

}  // namespace capflow
